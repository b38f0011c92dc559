//! Dataset ingestion and emission.
//!
//! On-disk layout:
//!
//! ```text
//! root/images/<image_id>.pgm|png|tiff   8- or 16-bit grayscale
//! root/masks/<image_id>.png             label or binary mask, same size
//! root/cases.csv                        header `image_id,case_id`
//! ```
//!
//! A mask with a single distinct nonzero value is treated as binary and split
//! into 8-connected components; a mask with several distinct nonzero values is
//! treated as a label image with one annotation per label.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma};

use super::{connected_components, AnnotationSet, Connectivity, Mammogram, RegionMask};
use crate::{Error, Result};

const IMAGE_EXTENSIONS: [&str; 4] = ["pgm", "png", "tiff", "tif"];

fn open_gray(path: &Path) -> Result<(Vec<f32>, usize, usize)> {
    let img = image::open(path)
        .map_err(|e| Error::Data(format!("cannot read image {}: {e}", path.display())))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(f32::from).collect(),
        DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(f32::from).collect(),
        other => other.into_luma16().into_raw().into_iter().map(f32::from).collect(),
    };
    Ok((pixels, w, h))
}

fn mask_to_annotations(path: &Path, width: usize, height: usize) -> Result<AnnotationSet> {
    let (raw, mw, mh) = open_gray(path)?;
    if (mw, mh) != (width, height) {
        return Err(Error::Data(format!(
            "mask {} is {mw}x{mh} but its image is {width}x{height}",
            path.display()
        )));
    }
    let labels: Vec<u32> = raw.iter().map(|&v| v as u32).collect();
    let mut distinct: Vec<u32> = labels.iter().copied().filter(|&v| v != 0).collect();
    distinct.sort_unstable();
    distinct.dedup();

    let regions = if distinct.len() <= 1 {
        // Binary mask: each 8-connected blob is one annotation.
        let fg: Vec<bool> = labels.iter().map(|&v| v != 0).collect();
        connected_components(&fg, width, height, Connectivity::Eight)
    } else {
        // Label mask: one annotation per distinct nonzero label.
        distinct
            .iter()
            .map(|&label| {
                let points: Vec<(usize, usize)> = labels
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v == label)
                    .map(|(i, _)| (i % width, i / width))
                    .collect();
                RegionMask::from_points(&points).expect("label has pixels")
            })
            .collect()
    };
    AnnotationSet::new(width, height, regions)
}

fn locate_image(images_dir: &Path, image_id: &str) -> Result<PathBuf> {
    for ext in IMAGE_EXTENSIONS {
        let candidate = images_dir.join(format!("{image_id}.{ext}"));
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    Err(Error::Data(format!(
        "no image file for id '{image_id}' under {} (tried {})",
        images_dir.display(),
        IMAGE_EXTENSIONS.join(", ")
    )))
}

/// Loads every record listed in `root/cases.csv`.
///
/// Every listed image must exist and have a mask file (which may contain no
/// foreground at all). Files on disk that are not listed are ignored.
pub fn load_dataset(root: &Path, pixel_spacing_mm: f64) -> Result<Vec<(Mammogram, AnnotationSet)>> {
    let cases_path = root.join("cases.csv");
    let mut reader = csv::Reader::from_path(&cases_path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", cases_path.display())))?;
    {
        let headers = reader
            .headers()
            .map_err(|e| Error::Data(format!("bad header in {}: {e}", cases_path.display())))?;
        if headers.len() < 2 || &headers[0] != "image_id" || &headers[1] != "case_id" {
            return Err(Error::Data(format!(
                "{} must start with header 'image_id,case_id'",
                cases_path.display()
            )));
        }
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Data(format!("bad row in {}: {e}", cases_path.display())))?;
        let image_id = row.get(0).unwrap_or_default().trim().to_string();
        let case_id = row.get(1).unwrap_or_default().trim().to_string();
        if image_id.is_empty() || case_id.is_empty() {
            return Err(Error::Data(format!("empty image_id/case_id in {}", cases_path.display())));
        }

        let image_path = locate_image(&root.join("images"), &image_id)?;
        let (pixels, width, height) = open_gray(&image_path)?;
        let mammogram = Mammogram::new(pixels, width, height, pixel_spacing_mm, case_id, &image_id)?;

        let mask_path = root.join("masks").join(format!("{image_id}.png"));
        if !mask_path.is_file() {
            return Err(Error::Data(format!(
                "missing annotation mask {} (write an all-zero mask for images without findings)",
                mask_path.display()
            )));
        }
        let annotations = mask_to_annotations(&mask_path, width, height)?;
        records.push((mammogram, annotations));
    }
    Ok(records)
}

fn write_png16(path: &Path, width: usize, height: usize, values: &[u16]) -> Result<()> {
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(width as u32, height as u32, values.to_vec())
            .expect("buffer matches dimensions");
    buf.save(path).map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
}

/// Writes records in the `load_dataset` layout: 16-bit PNG images, 16-bit
/// label-mask PNGs (annotation index + 1) and `cases.csv`.
pub fn save_dataset(root: &Path, records: &[(Mammogram, AnnotationSet)]) -> Result<()> {
    let images_dir = root.join("images");
    let masks_dir = root.join("masks");
    std::fs::create_dir_all(&images_dir).map_err(|e| Error::io(&images_dir, e))?;
    std::fs::create_dir_all(&masks_dir).map_err(|e| Error::io(&masks_dir, e))?;

    // Keep csv rows sorted by image id so output is reproducible regardless of
    // input order.
    let mut rows: BTreeMap<String, String> = BTreeMap::new();
    for (img, annots) in records {
        let w = img.width();
        let h = img.height();
        let pixels: Vec<u16> =
            img.pixels().iter().map(|&p| p.round().clamp(0.0, u16::MAX as f32) as u16).collect();
        write_png16(&images_dir.join(format!("{}.png", img.image_id)), w, h, &pixels)?;

        let mut mask = vec![0u16; w * h];
        for (k, region) in annots.regions.iter().enumerate() {
            for (x, y) in region.pixels() {
                mask[y * w + x] = (k + 1) as u16;
            }
        }
        write_png16(&masks_dir.join(format!("{}.png", img.image_id)), w, h, &mask)?;
        rows.insert(img.image_id.clone(), img.case_id.clone());
    }

    let cases_path = root.join("cases.csv");
    let mut out = String::from("image_id,case_id\n");
    for (image_id, case_id) in rows {
        out.push_str(&image_id);
        out.push(',');
        out.push_str(&case_id);
        out.push('\n');
    }
    std::fs::write(&cases_path, out).map_err(|e| Error::io(&cases_path, e))
}
