//! Grade blocks: regions of roughly constant composition with a
//! destination tag and a tonnage share.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::ValidateError;
use crate::chemistry::{AssaySample, ClassGroup, DestinationScheme};
use crate::num::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct GradeBlock<T> {
    pub id: String,
    pub pit: String,
    /// Bench floor RL; the bench spans `[bench, bench + height)`.
    pub bench: T,
    pub dest_tag: String,
    pub tonnage_pct: T,
    pub averages: BTreeMap<String, T>,
    /// Plan extent `[x_min, x_max, y_min, y_max]`.
    pub footprint: [T; 4],
    pub z: (T, T),
    /// Indices into the sample list, filled by [`assign_members`].
    pub members: Vec<usize>,
}

impl<T: Real> GradeBlock<T> {
    pub fn group(&self) -> ClassGroup {
        ClassGroup::from_name(&self.dest_tag)
    }

    /// Midpoint inside the half-open prism.
    pub fn contains(&self, s: &AssaySample<T>) -> bool {
        let m = s.midpoint();
        let [x0, x1, y0, y1] = self.footprint;
        m.x >= x0 && m.x < x1 && m.y >= y0 && m.y < y1 && m.z >= self.z.0 && m.z < self.z.1
    }
}

/// Members are samples inside the block prism whose own destination class
/// falls in the block's tag group.
pub fn assign_members<T: Real>(
    blocks: &mut [GradeBlock<T>],
    samples: &[AssaySample<T>],
    scheme: &DestinationScheme,
) -> Result<(), ValidateError> {
    let groups: Vec<ClassGroup> = samples
        .iter()
        .map(|s| scheme.classify(&s.chemistry).map(|c| scheme.group(c)))
        .collect::<Result<_, _>>()?;
    for b in blocks.iter_mut() {
        let g = b.group();
        b.members = samples
            .iter()
            .enumerate()
            .filter(|(i, s)| groups[*i] == g && b.contains(s))
            .map(|(i, _)| i)
            .collect();
    }
    Ok(())
}

const BASE: [&str; 7] = ["block_id", "pit", "bench", "dest_tag", "tonnage_pct", "element", "gb_average"];
const EXTENT: [&str; 6] = ["x_min", "x_max", "y_min", "y_max", "z_min", "z_max"];

/// Long format, one row per (block, element). Extent columns are optional;
/// without them a block has no footprint and no members.
pub fn read_blocks_str<T: Real>(text: &str, bench_height: T) -> Result<Vec<GradeBlock<T>>, ValidateError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| ValidateError::Csv { line: 1, message: e.to_string() })?.clone();
    let col = |n: &str| headers.iter().position(|h| h == n);
    let base: Vec<usize> = BASE
        .iter()
        .map(|n| col(n).ok_or_else(|| ValidateError::Csv { line: 1, message: format!("missing column '{n}'") }))
        .collect::<Result<_, _>>()?;
    let extent: Option<Vec<usize>> = EXTENT.iter().map(|n| col(n)).collect();
    let mut order: Vec<String> = Vec::new();
    let mut map: BTreeMap<String, GradeBlock<T>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| ValidateError::Csv { line, message: e.to_string() })?;
        let text = |c: usize| rec.get(c).unwrap_or("").to_string();
        let num = |c: usize| -> Result<T, ValidateError> {
            rec.get(c)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .map(T::of)
                .ok_or_else(|| ValidateError::Csv { line, message: format!("column '{}' is not a number", &headers[c]) })
        };
        let id = text(base[0]);
        let bench = num(base[2])?;
        let tonnage = num(base[4])?;
        let avg = num(base[6])?;
        if tonnage < T::zero() {
            return Err(ValidateError::Csv { line, message: "negative tonnage".into() });
        }
        if !(avg >= T::zero() && avg <= T::of(100.0)) {
            return Err(ValidateError::Csv { line, message: "grade-block average outside [0, 100]".into() });
        }
        let (footprint, z) = match &extent {
            Some(e) => ([num(e[0])?, num(e[1])?, num(e[2])?, num(e[3])?], (num(e[4])?, num(e[5])?)),
            None => ([T::zero(); 4], (bench, bench + bench_height)),
        };
        let element = text(base[5]);
        match map.get_mut(&id) {
            Some(b) => {
                if b.bench != bench || b.tonnage_pct != tonnage || b.dest_tag != text(base[3]) || b.footprint != footprint {
                    return Err(ValidateError::Csv { line, message: format!("block '{id}' rows disagree") });
                }
                if b.averages.insert(element.clone(), avg).is_some() {
                    return Err(ValidateError::Csv { line, message: format!("block '{id}' repeats element '{element}'") });
                }
            }
            None => {
                order.push(id.clone());
                map.insert(
                    id.clone(),
                    GradeBlock {
                        id,
                        pit: text(base[1]),
                        bench,
                        dest_tag: text(base[3]),
                        tonnage_pct: tonnage,
                        averages: BTreeMap::from([(element, avg)]),
                        footprint,
                        z,
                        members: Vec::new(),
                    },
                );
            }
        }
    }
    Ok(order.into_iter().map(|id| map.remove(&id).expect("inserted")).collect())
}

pub fn read_blocks<T: Real>(path: &Path, bench_height: T) -> Result<Vec<GradeBlock<T>>, ValidateError> {
    read_blocks_str(&fs::read_to_string(path)?, bench_height)
}

pub fn write_blocks_string<T: Real>(blocks: &[GradeBlock<T>]) -> String {
    let mut s = BASE.join(",");
    s.push(',');
    s.push_str(&EXTENT.join(","));
    s.push('\n');
    let f = |v: T| format!("{}", v.to_f64_lossy());
    for b in blocks {
        for (e, v) in &b.averages {
            let [x0, x1, y0, y1] = b.footprint;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                b.id,
                b.pit,
                f(b.bench),
                b.dest_tag,
                f(b.tonnage_pct),
                e,
                f(*v),
                f(x0),
                f(x1),
                f(y0),
                f(y1),
                f(b.z.0),
                f(b.z.1)
            );
        }
    }
    s
}

pub fn write_blocks<T: Real>(path: &Path, blocks: &[GradeBlock<T>]) -> Result<(), ValidateError> {
    fs::write(path, write_blocks_string(blocks))?;
    Ok(())
}
