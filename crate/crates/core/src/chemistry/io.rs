//! Assay CSV:
//! `hole_id,x,y,z,interval_length,Fe,SiO2,Al2O3[,extra...][,geozone][,tonnage]`.

use std::collections::BTreeMap;
use std::path::Path;

use super::{AssaySample, ChemistryError, REQUIRED_ELEMENTS};
use crate::geom::Vec3;
use crate::num::Real;
use crate::zone::ZoneId;

const FIXED: [&str; 5] = ["hole_id", "x", "y", "z", "interval_length"];

pub fn read_assays<T: Real>(path: impl AsRef<Path>) -> Result<Vec<AssaySample<T>>, ChemistryError> {
    read_assays_str(&std::fs::read_to_string(path)?)
}

pub fn read_assays_str<T: Real>(text: &str) -> Result<Vec<AssaySample<T>>, ChemistryError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(1, e))?
        .iter()
        .map(str::to_string)
        .collect();
    for (i, name) in FIXED.iter().enumerate() {
        if header.get(i).map(String::as_str) != Some(*name) {
            return Err(ChemistryError::Csv {
                line: 1,
                message: format!("column {} must be '{name}'", i + 1),
            });
        }
    }
    for e in REQUIRED_ELEMENTS {
        if !header.iter().any(|h| h == e) {
            return Err(ChemistryError::MissingElement {
                element: e.to_string(),
                context: "assay header".to_string(),
            });
        }
    }
    let geozone_col = header.iter().position(|h| h == "geozone");
    let tonnage_col = header.iter().position(|h| h == "tonnage");
    let element_cols: Vec<(usize, &str)> = header
        .iter()
        .enumerate()
        .skip(FIXED.len())
        .filter(|(i, _)| Some(*i) != geozone_col && Some(*i) != tonnage_col)
        .map(|(i, h)| (i, h.as_str()))
        .collect();

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(0, e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != header.len() {
            return Err(ChemistryError::Csv {
                line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let num = |i: usize| -> Result<T, ChemistryError> {
            rec[i].parse::<f64>().map(T::of).map_err(|_| ChemistryError::Csv {
                line,
                message: format!("{}: invalid number '{}'", header[i], &rec[i]),
            })
        };
        let mut chemistry = BTreeMap::new();
        for &(i, name) in &element_cols {
            chemistry.insert(name.to_string(), num(i)?);
        }
        let geozone = match geozone_col {
            Some(i) if !rec[i].is_empty() => Some(rec[i].parse::<ZoneId>().map_err(|message| {
                ChemistryError::Csv { line, message }
            })?),
            _ => None,
        };
        let tonnage = match tonnage_col {
            Some(i) if !rec[i].is_empty() => {
                let t = num(i)?;
                if !(t >= T::zero()) {
                    return Err(ChemistryError::Csv {
                        line,
                        message: "tonnage must be non-negative".to_string(),
                    });
                }
                Some(t)
            }
            _ => None,
        };
        let sample = AssaySample {
            hole_id: rec[0].to_string(),
            collar: Vec3::new(num(1)?, num(2)?, num(3)?),
            interval_length: num(4)?,
            chemistry,
            geozone,
            tonnage,
        };
        sample.validate().map_err(|e| ChemistryError::Csv {
            line,
            message: e.to_string(),
        })?;
        out.push(sample);
    }
    Ok(out)
}

fn csv_err(line: usize, e: csv::Error) -> ChemistryError {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(line);
    ChemistryError::Csv {
        line,
        message: e.to_string(),
    }
}

/// Writes samples with the element columns in the order Fe, SiO2, Al2O3
/// followed by any extras (sorted). The `geozone` and `tonnage` columns
/// appear only when some sample carries them.
pub fn write_assays_string<T: Real>(samples: &[AssaySample<T>]) -> String {
    let mut extras: Vec<&str> = samples
        .iter()
        .flat_map(|s| s.chemistry.keys().map(String::as_str))
        .filter(|k| !REQUIRED_ELEMENTS.contains(k))
        .collect();
    extras.sort_unstable();
    extras.dedup();
    let with_zone = samples.iter().any(|s| s.geozone.is_some());
    let with_tonnage = samples.iter().any(|s| s.tonnage.is_some());

    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut head: Vec<&str> = FIXED.to_vec();
    head.extend(REQUIRED_ELEMENTS);
    head.extend(extras.iter().copied());
    if with_zone {
        head.push("geozone");
    }
    if with_tonnage {
        head.push("tonnage");
    }
    w.write_record(&head).expect("in-memory write");
    let f = |v: T| v.to_f64_lossy().to_string();
    for s in samples {
        let mut row = vec![
            s.hole_id.clone(),
            f(s.collar.x),
            f(s.collar.y),
            f(s.collar.z),
            f(s.interval_length),
        ];
        for e in REQUIRED_ELEMENTS.iter().chain(extras.iter()) {
            row.push(s.chemistry.get(*e).map(|&v| f(v)).unwrap_or_default());
        }
        if with_zone {
            row.push(s.geozone.map(|z| z.to_string()).unwrap_or_default());
        }
        if with_tonnage {
            row.push(s.tonnage.map(f).unwrap_or_default());
        }
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn write_assays<T: Real>(
    path: impl AsRef<Path>,
    samples: &[AssaySample<T>],
) -> Result<(), ChemistryError> {
    std::fs::write(path, write_assays_string(samples))?;
    Ok(())
}
