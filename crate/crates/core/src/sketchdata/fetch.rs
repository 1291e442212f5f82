use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use log::{info, warn};

use super::drawing::{parse_drawing, RawDrawing};
use super::{Result, SketchError};

/// Public bucket holding one simplified newline-delimited JSON file per
/// category.
pub const QUICKDRAW_SIMPLIFIED_URL: &str =
    "https://storage.googleapis.com/quickdraw_dataset/full/simplified";

/// Categories this tool knows how to fetch.
pub const SUPPORTED_CATEGORIES: [&str; 3] = ["calculator", "camera", "cellphone"];

/// Environment variable overriding the download cache directory.
pub const CACHE_ENV: &str = "QUANTUMDRAW_CACHE";

pub fn default_cache_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os(CACHE_ENV) {
        return PathBuf::from(dir);
    }
    let home = std::env::var_os("HOME").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    home.join(".cache").join("quantumdraw")
}

pub fn category_file(cache_dir: &Path, category: &str) -> PathBuf {
    cache_dir.join(format!("{category}.ndjson"))
}

fn check_category(category: &str) -> Result<()> {
    if SUPPORTED_CATEGORIES.contains(&category) {
        Ok(())
    } else {
        Err(SketchError::UnknownCategory(category.to_string()))
    }
}

/// Non-empty with a parseable first line.
fn verify_file(path: &Path) -> Result<()> {
    let file = File::open(path).map_err(|e| SketchError::Io(format!("{}: {e}", path.display())))?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| SketchError::Io(e.to_string()))?;
    if first.trim().is_empty() {
        return Err(SketchError::Payload(format!("{} is empty", path.display())));
    }
    parse_drawing(first.trim())
        .map(|_| ())
        .map_err(|e| SketchError::Payload(format!("{}: first line: {e}", path.display())))
}

/// Downloads the simplified file for `category` into `cache_dir` (once)
/// and returns its path.
pub fn fetch_category(category: &str, cache_dir: &Path) -> Result<PathBuf> {
    fetch_category_from(QUICKDRAW_SIMPLIFIED_URL, category, cache_dir)
}

/// [`fetch_category`] against an alternative base URL.
pub fn fetch_category_from(base_url: &str, category: &str, cache_dir: &Path) -> Result<PathBuf> {
    check_category(category)?;
    let path = category_file(cache_dir, category);
    if path.exists() && verify_file(&path).is_ok() {
        return Ok(path);
    }
    std::fs::create_dir_all(cache_dir).map_err(|e| SketchError::Io(e.to_string()))?;
    let url = format!("{}/{}.ndjson", base_url.trim_end_matches('/'), category.replace(' ', "%20"));
    info!("downloading {url}");
    download(&url, &path)?;
    if let Err(e) = verify_file(&path) {
        let _ = std::fs::remove_file(&path);
        return Err(e);
    }
    Ok(path)
}

#[cfg(feature = "fetch")]
fn download(url: &str, dest: &Path) -> Result<()> {
    let part = dest.with_extension("ndjson.part");
    let mut resp = ureq::get(url)
        .call()
        .map_err(|e| SketchError::Network(format!("{url}: {e}")))?;
    let mut out = File::create(&part).map_err(|e| SketchError::Io(e.to_string()))?;
    std::io::copy(&mut resp.body_mut().as_reader(), &mut out)
        .map_err(|e| SketchError::Network(format!("{url}: {e}")))?;
    drop(out);
    std::fs::rename(&part, dest).map_err(|e| SketchError::Io(e.to_string()))
}

#[cfg(not(feature = "fetch"))]
fn download(url: &str, _dest: &Path) -> Result<()> {
    Err(SketchError::Network(format!(
        "{url}: built without the `fetch` feature"
    )))
}

/// Reads up to `cap` valid drawings from a category file, in file order.
/// Lines that fail to parse or violate the drawing invariants are skipped
/// with a warning.
pub fn read_category_file(path: &Path, cap: usize) -> Result<Vec<RawDrawing>> {
    let file = File::open(path).map_err(|e| SketchError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    let mut rejected = 0usize;
    for line in BufReader::new(file).lines() {
        if out.len() >= cap {
            break;
        }
        let line = line.map_err(|e| SketchError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_drawing(&line) {
            Ok(d) => out.push(d),
            Err(e) => {
                rejected += 1;
                if rejected <= 5 {
                    warn!("{}: skipping drawing: {e}", path.display());
                }
            }
        }
    }
    if rejected > 0 {
        warn!("{}: {rejected} malformed drawings skipped", path.display());
    }
    Ok(out)
}
