//! Model files and prediction CSVs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::kernel::{GpInput, Hyper, Support};
use super::model::GpModel;
use super::GpError;
use crate::geom::Vec3;
use crate::num::{format_sig, Real};
use crate::zone::ZoneId;

const MAGIC: &str = "# geowarp gp model v1";

fn full<T: Real>(x: T) -> String {
    format!("{}", x.to_f64_lossy())
}

fn data_block<T: Real>(m: &GpModel<T>) -> String {
    let mut s = String::new();
    for (i, t) in m.inputs().iter().zip(m.targets()) {
        let _ = writeln!(s, "{},{},{},{},{}", full(i.top.x), full(i.top.y), full(i.top.z), full(i.h), full(*t));
    }
    s
}

pub fn checksum(data: &str) -> String {
    hex::encode(Sha256::digest(data.as_bytes()))
}

pub fn model_to_string<T: Real>(m: &GpModel<T>) -> String {
    let h = m.hyper();
    let [lx, ly, lz] = h.lengths();
    let sig = |v: T| format_sig(v.to_f64_lossy(), 9);
    let data = data_block(m);
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "element = {}", m.element);
    let _ = writeln!(s, "geozone = {}", m.geozone);
    let _ = writeln!(s, "support = {}", m.support);
    let _ = writeln!(s, "length_x = {}", sig(lx));
    let _ = writeln!(s, "length_y = {}", sig(ly));
    let _ = writeln!(s, "length_z = {}", sig(lz));
    let _ = writeln!(s, "signal_variance = {}", sig(h.signal_variance()));
    let _ = writeln!(s, "noise_variance = {}", sig(h.noise_variance()));
    let _ = writeln!(s, "offset = {}", full(m.offset()));
    let _ = writeln!(s, "n = {}", m.len());
    let _ = writeln!(s, "sha256 = {}", checksum(&data));
    let _ = writeln!(s, "[data]");
    s.push_str(&data);
    s
}

pub fn write_model<T: Real>(path: &Path, m: &GpModel<T>) -> Result<(), GpError> {
    fs::write(path, model_to_string(m))?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> GpError {
    GpError::Format(msg.into())
}

pub fn model_from_str<T: Real>(text: &str) -> Result<GpModel<T>, GpError> {
    let (head, data) = text.split_once("[data]\n").ok_or_else(|| bad("missing [data] section"))?;
    let mut lines = head.lines();
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(bad("not a geowarp gp model file"));
    }
    let mut kv = std::collections::BTreeMap::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("bad header line '{line}'")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| kv.get(k).cloned().ok_or_else(|| bad(format!("missing key '{k}'")));
    let num = |k: &str| -> Result<f64, GpError> { get(k)?.parse::<f64>().map_err(|_| bad(format!("bad number for '{k}'"))) };
    let want = get("sha256")?;
    if checksum(data) != want {
        return Err(GpError::Checksum);
    }
    let element = get("element")?;
    let geozone: ZoneId = get("geozone")?.parse().map_err(|e: String| bad(e))?;
    let support: Support = get("support")?.parse().map_err(|e: String| bad(e))?;
    let hyper = Hyper::from_log(
        [num("length_x")?, num("length_y")?, num("length_z")?, num("signal_variance")?, num("noise_variance")?].map(|v| T::of(v.ln())),
    );
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for (i, line) in data.lines().enumerate() {
        let f: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad(format!("data row {}: not numeric", i + 1)))?;
        if f.len() != 5 {
            return Err(bad(format!("data row {}: expected 5 fields", i + 1)));
        }
        inputs.push(GpInput::interval(Vec3::new(T::of(f[0]), T::of(f[1]), T::of(f[2])), T::of(f[3])));
        targets.push(T::of(f[4]));
    }
    if let Ok(n) = get("n") {
        if n.parse::<usize>().ok() != Some(inputs.len()) {
            return Err(bad("row count does not match n"));
        }
    }
    GpModel::fit(&element, geozone, support, inputs, targets, hyper)
}

pub fn read_model<T: Real>(path: &Path) -> Result<GpModel<T>, GpError> {
    model_from_str(&fs::read_to_string(path)?)
}

/// Query inputs from CSV with columns `x,y,z[,h]`.
pub fn read_queries_str<T: Real>(text: &str) -> Result<Vec<GpInput<T>>, GpError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |n: &str| headers.iter().position(|h| h == n);
    let (x, y, z) = match (col("x"), col("y"), col("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(bad("query CSV needs x,y,z columns")),
    };
    let h = col("h");
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let f = |c: usize| -> Result<T, GpError> {
            rec.get(c)
                .and_then(|s| s.parse::<f64>().ok())
                .map(T::of)
                .ok_or_else(|| bad(format!("query row {}: bad number", i + 2)))
        };
        let top = Vec3::new(f(x)?, f(y)?, f(z)?);
        let len = match h {
            Some(c) => f(c)?,
            None => T::zero(),
        };
        if len < T::zero() {
            return Err(bad(format!("query row {}: negative h", i + 2)));
        }
        out.push(GpInput::interval(top, len));
    }
    Ok(out)
}

pub fn read_queries<T: Real>(path: &Path) -> Result<Vec<GpInput<T>>, GpError> {
    read_queries_str(&fs::read_to_string(path)?)
}

pub fn predictions_csv<T: Real>(queries: &[GpInput<T>], preds: &[(T, T)], with_h: bool) -> String {
    let mut s = String::from(if with_h { "x,y,z,h,mean,variance\n" } else { "x,y,z,mean,variance\n" });
    for (q, (m, v)) in queries.iter().zip(preds) {
        let _ = write!(s, "{},{},{},", full(q.top.x), full(q.top.y), full(q.top.z));
        if with_h {
            let _ = write!(s, "{},", full(q.h));
        }
        let _ = writeln!(s, "{},{}", full(*m), full(*v));
    }
    s
}
