//! On-disk experiment artifacts: detection CSVs and curve CSVs.

use std::path::Path;

use crate::data::BBox;
use crate::{Error, Result};

/// One row of the detections CSV
/// (`image_id,x0,y0,x1,y1,score,cluster_id`; cluster −1 means unclustered).
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRow {
    pub image_id: String,
    pub bbox: BBox,
    pub score: f64,
    pub cluster_id: i64,
}

pub fn write_detections_csv(path: &Path, rows: &[DetectionRow]) -> Result<()> {
    let mut out = String::from("image_id,x0,y0,x1,y1,score,cluster_id\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.image_id, r.bbox.x0, r.bbox.y0, r.bbox.x1, r.bbox.y1, r.score, r.cluster_id
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_detections_csv(path: &Path) -> Result<Vec<DetectionRow>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| Error::Data(format!("bad row in {}: {e}", path.display())))?;
        if record.len() < 7 {
            return Err(Error::Data(format!("detections row needs 7 fields in {}", path.display())));
        }
        let field = |i: usize| record.get(i).unwrap_or_default().trim().to_string();
        let parse_usize = |i: usize| -> Result<usize> {
            field(i)
                .parse()
                .map_err(|_| Error::Data(format!("bad integer '{}' in {}", field(i), path.display())))
        };
        rows.push(DetectionRow {
            image_id: field(0),
            bbox: BBox {
                x0: parse_usize(1)?,
                y0: parse_usize(2)?,
                x1: parse_usize(3)?,
                y1: parse_usize(4)?,
            },
            score: field(5)
                .parse()
                .map_err(|_| Error::Data(format!("bad score '{}' in {}", field(5), path.display())))?,
            cluster_id: field(6)
                .parse()
                .map_err(|_| Error::Data(format!("bad cluster id in {}", path.display())))?,
        });
    }
    Ok(rows)
}

/// Writes a curve as `grid_value,mean_tpr,std_tpr`.
pub fn write_curve_csv(path: &Path, grid: &[f64], mean: &[f64], std: &[f64]) -> Result<()> {
    let mut out = String::from("grid_value,mean_tpr,std_tpr\n");
    for ((g, m), s) in grid.iter().zip(mean).zip(std) {
        out.push_str(&format!("{g},{m},{s}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
