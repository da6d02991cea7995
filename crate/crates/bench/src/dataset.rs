//! Labeled image dataset export.

use std::collections::BTreeMap;
use std::path::Path;

use mapf_core::encode::{encode, InstanceImage};
use mapf_core::{GridMap, ProblemInstance};

use crate::error::{write, BenchError, Result};
use crate::formats::{portfolio_text, write_manifest, ManifestRow, ResultSet};
use crate::runner::parallel_map;

pub fn png_bytes(img: &InstanceImage) -> Result<Vec<u8>> {
    let raw = image::RgbImage::from_raw(img.width(), img.height(), img.as_bytes())
        .ok_or_else(|| BenchError::Runtime("image buffer size mismatch".into()))?;
    let mut out = std::io::Cursor::new(Vec::new());
    raw.write_to(&mut out, image::ImageFormat::Png).map_err(|e| BenchError::Runtime(format!("png encoding: {e}")))?;
    Ok(out.into_inner())
}

pub fn read_png(path: &Path) -> Result<image::RgbImage> {
    let img = image::open(path).map_err(|e| BenchError::data(path, e.to_string()))?;
    Ok(img.to_rgb8())
}

/// Writes `images/<id>.png`, `manifest.csv` and `portfolio.txt` under `dir`.
/// Every instance needs a map and a result.
pub fn export_dataset(
    instances: &[ProblemInstance],
    results: &ResultSet,
    maps: &BTreeMap<String, GridMap>,
    dir: &Path,
    jobs: usize,
) -> Result<Vec<ManifestRow>> {
    let by_id: BTreeMap<&str, _> = results.results.iter().map(|r| (r.instance_id.as_str(), r)).collect();
    let manifest_path = dir.join("manifest.csv");
    for inst in instances {
        if !by_id.contains_key(inst.id.as_str()) {
            return Err(BenchError::data(&manifest_path, format!("no results for instance {}", inst.id)));
        }
        if !maps.contains_key(&inst.map_name) {
            return Err(BenchError::data(&manifest_path, format!("map {} of instance {} not found", inst.map_name, inst.id)));
        }
    }
    let rows = parallel_map(jobs, instances, |inst| -> Result<ManifestRow> {
        let img = encode(inst, &maps[&inst.map_name]);
        let rel = format!("images/{}.png", inst.id);
        write(&dir.join(&rel), png_bytes(&img)?)?;
        Ok(ManifestRow::new(inst, rel, by_id[inst.id.as_str()]))
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    write_manifest(&manifest_path, &rows)?;
    write(&dir.join("portfolio.txt"), portfolio_text())?;
    Ok(rows)
}
