//! CSV and JSON serialization. Every float is written with 17 significant
//! digits so that files round-trip exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::connecting::ConnectingKernel;
use crate::error::{Error, Result};
use crate::forward::ResponseMatrix;
use crate::gl::OperatorM;
use crate::goursat::KernelField;
use crate::krein::CauchyProfile;
use crate::model::{RecoveredPotential, UniformGrid};
use crate::spectral::SpectralMeasure;

pub const RESPONSE_HEADER: [&str; 5] = ["t", "r11", "r12", "r21", "r22"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON with 17-significant-digit floats; non-finite values become `null`.
struct Fixed17<'a>(PrettyFormatter<'a>);

impl Formatter for Fixed17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            w.write_all(fmt_f64(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<BufWriter<File>>> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    Ok(w)
}

fn row(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| fmt_f64(*v)).collect()
}

pub fn write_response_csv(r: &ResponseMatrix, path: &Path) -> Result<()> {
    let mut w = csv_writer(path, &RESPONSE_HEADER)?;
    for k in 0..=r.grid().n {
        w.write_record(row(&[r.grid().t(k), r.r11[k], r.r12[k], r.r21[k], r.r22[k]]))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads response data; requires a uniform time column starting at 0 and
/// reaching at least `2 horizon`.
pub fn read_response_csv(path: &Path, horizon: f64) -> Result<ResponseMatrix> {
    let fail = |row: usize, message: String| Error::Ingestion { path: path.to_path_buf(), row, message };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let header = rdr.headers()?.clone();
    if header.iter().ne(RESPONSE_HEADER.iter().copied()) {
        return Err(fail(1, format!("header must be {:?}, found {:?}", RESPONSE_HEADER.join(","), header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut cols: [Vec<f64>; 5] = Default::default();
    for (idx, rec) in rdr.records().enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| fail(line, e.to_string()))?;
        if rec.len() != 5 {
            return Err(fail(line, format!("expected 5 fields, found {}", rec.len())));
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| fail(line, format!("column {} is not a number: {field:?}", RESPONSE_HEADER[c])))?;
            if !v.is_finite() {
                return Err(fail(line, format!("column {} is not finite", RESPONSE_HEADER[c])));
            }
            cols[c].push(v);
        }
    }
    let t = &cols[0];
    if t.len() < 9 {
        return Err(fail(t.len() + 1, format!("need at least 9 samples, found {}", t.len())));
    }
    if t[0].abs() > 1e-12 {
        return Err(fail(2, format!("time column must start at 0, found {}", t[0])));
    }
    let n = t.len() - 1;
    let mut steps: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    if let Some(k) = steps.iter().position(|d| d.is_nan() || *d <= 0.0) {
        return Err(fail(k + 3, format!("time column is not increasing ({} after {})", t[k + 1], t[k])));
    }
    steps.sort_by(f64::total_cmp);
    let h = steps[n / 2];
    for (k, w) in t.windows(2).enumerate() {
        if (w[1] - w[0] - h).abs() > 1e-6 * h {
            return Err(fail(k + 3, format!("time {} breaks the uniform step {h} (gap or jitter)", w[1])));
        }
    }
    let h = t[n] / n as f64;
    if let Some(k) = t.iter().enumerate().position(|(k, tk)| (tk - k as f64 * h).abs() > 1e-6 * h) {
        return Err(fail(k + 2, format!("time {} drifts from the uniform grid", t[k])));
    }
    if t[n] < 2.0 * horizon * (1.0 - 1e-9) {
        return Err(fail(
            n + 2,
            format!("response horizon {} is shorter than 2T = {}", t[n], 2.0 * horizon),
        ));
    }
    let grid = UniformGrid::new(t[n], n)?;
    let [_, r11, r12, r21, r22] = cols;
    ResponseMatrix::new(grid, r11, r12, r21, r22)
}

/// Kernel values at grid nodes inside the cone.
pub fn write_kernels_csv(k: &KernelField, path: &Path) -> Result<()> {
    let mut w = csv_writer(path, &["t", "x", "w1", "w2"])?;
    let g = k.grid();
    for t in 0..=g.n {
        for i in -(t as isize)..=(t as isize) {
            w.write_record(row(&[g.t(t), i as f64 * g.h(), k.w1(i, t), k.w2(i, t)]))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_connecting_csv(ck: &ConnectingKernel, path: &Path) -> Result<()> {
    let mut w = csv_writer(path, &["t", "s", "C11", "C12", "C21", "C22"])?;
    let g = ck.grid();
    for i in 0..=g.n {
        for j in 0..=g.n {
            let c = ck.at(i, j);
            w.write_record(row(&[g.t(i), g.t(j), c.a11, c.a12, c.a21, c.a22]))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_krein_csv(p: &CauchyProfile, q: &RecoveredPotential, path: &Path) -> Result<()> {
    let mut w = csv_writer(path, &["x", "y", "q", "valid", "residual"])?;
    for j in 0..p.x.len() {
        let k = j.abs_diff(p.n);
        let mut r = row(&[p.x[j], p.y[j], q.q[j]]);
        r.push(u8::from(q.valid[j]).to_string());
        r.push(fmt_f64(p.residuals[k]));
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_gl_kernel_csv(m: &OperatorM, path: &Path) -> Result<()> {
    let mut w = csv_writer(path, &["x", "s", "m11", "m12", "m21", "m22"])?;
    let g = m.grid();
    for i in 0..=g.n {
        for j in i..=g.n {
            let v = m.at(i, j);
            w.write_record(row(&[g.t(i), g.t(j), v.a11, v.a12, v.a21, v.a22]))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_q_csv(q: &RecoveredPotential, route: &str, path: &Path) -> Result<()> {
    let mut w = csv_writer(path, &["x", "q", "valid", "route"])?;
    for j in 0..q.x.len() {
        let mut r = row(&[q.x[j], q.q[j]]);
        r.push(u8::from(q.valid[j]).to_string());
        r.push(route.to_string());
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_measure_csv(s: &SpectralMeasure, path: &Path) -> Result<()> {
    let mut w = csv_writer(path, &["n", "lambda", "beta", "gamma"])?;
    for k in 0..s.len() {
        let mut r = vec![(k + 1).to_string()];
        r.extend(row(&[s.lambda[k], s.beta[k], s.gamma[k]]));
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
