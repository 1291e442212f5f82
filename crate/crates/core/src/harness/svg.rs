use std::fmt::Write as _;

use super::train::ExperimentRecord;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 240.0;
const MARGIN: f64 = 40.0;

/// Two-panel SVG (loss left, accuracy right). Solid lines are training
/// metrics, dashed lines validation; one colour per record.
pub fn learning_curves_svg(records: &[ExperimentRecord]) -> String {
    let width = 2.0 * (PANEL_W + 2.0 * MARGIN);
    let height = PANEL_H + 2.0 * MARGIN;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    let epochs = records.iter().map(ExperimentRecord::epochs).max().unwrap_or(1).max(2);
    let loss_max = records
        .iter()
        .flat_map(|r| r.train_loss.iter().chain(&r.val_loss))
        .copied()
        .fold(0.0, f64::max)
        .max(1e-9);

    let panels: [(&str, f64, f64, fn(&ExperimentRecord) -> (&[f64], &[f64])); 2] = [
        ("loss", 0.0, loss_max, |r| (&r.train_loss, &r.val_loss)),
        ("accuracy", 0.0, 1.0, |r| (&r.train_acc, &r.val_acc)),
    ];
    for (p, (title, lo, hi, series)) in panels.into_iter().enumerate() {
        let x0 = MARGIN + p as f64 * (PANEL_W + 2.0 * MARGIN);
        let y0 = MARGIN;
        let _ = writeln!(
            out,
            "<rect x=\"{x0}\" y=\"{y0}\" width=\"{PANEL_W}\" height=\"{PANEL_H}\" fill=\"none\" stroke=\"#444\"/>"
        );
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{title}</text>", x0 + PANEL_W / 2.0, y0 - 12.0);
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{hi:.2}</text>", x0 - 4.0, y0 + 4.0);
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{lo:.2}</text>", x0 - 4.0, y0 + PANEL_H);
        let _ = writeln!(out, "<text x=\"{x0}\" y=\"{}\">1</text>", y0 + PANEL_H + 14.0);
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{epochs}</text>",
            x0 + PANEL_W,
            y0 + PANEL_H + 14.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">epoch</text>",
            x0 + PANEL_W / 2.0,
            y0 + PANEL_H + 28.0
        );
        let px = |e: usize| x0 + PANEL_W * e as f64 / (epochs - 1) as f64;
        let py = |v: f64| y0 + PANEL_H * (1.0 - ((v - lo) / (hi - lo)).clamp(0.0, 1.0));
        for (i, r) in records.iter().enumerate() {
            let colour = PALETTE[i % PALETTE.len()];
            let (train, val) = series(r);
            for (vals, dash) in [(train, ""), (val, " stroke-dasharray=\"5,3\"")] {
                let pts: Vec<String> = vals
                    .iter()
                    .enumerate()
                    .map(|(e, &v)| format!("{:.2},{:.2}", px(e), py(v)))
                    .collect();
                let _ = writeln!(
                    out,
                    "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>",
                    pts.join(" ")
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}
