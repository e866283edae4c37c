//! Trajectory CSV: header `t,y1..yp,w1..wq[,x1..xn][,e1..ek]`, one row per
//! sample, numbers in plain decimal notation with 17 significant digits.

use std::io::{Read, Write};
use std::path::Path;

use innovest_core::{Series, Trajectory};

use crate::error::{io_err, CliError, Result};

/// Plain decimal with 17 significant digits, enough to round-trip any `f64`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{:.16}", if x == 0.0 { 0.0 } else { x });
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (16 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

fn header(traj: &Trajectory) -> Vec<String> {
    let mut h = vec![String::from("t")];
    let mut group = |prefix: &str, dim: usize| h.extend((1..=dim).map(|i| format!("{prefix}{i}")));
    group("y", traj.y.dim());
    group("w", traj.w.dim());
    if let Some(x) = &traj.x {
        group("x", x.dim());
    }
    if let Some(e) = &traj.e {
        group("e", e.dim());
    }
    h
}

pub fn write_to<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    traj.check()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(traj))?;
    let parts: Vec<&Series> = [Some(&traj.y), Some(&traj.w), traj.x.as_ref(), traj.e.as_ref()].into_iter().flatten().collect();
    let mut record = Vec::new();
    for t in 0..traj.len() {
        record.clear();
        record.push(t.to_string());
        for s in &parts {
            record.extend(s.row(t).iter().map(|&v| format_number(v)));
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| CliError::Parse(e.to_string()))?;
    Ok(())
}

pub fn to_string(traj: &Trajectory) -> Result<String> {
    let mut buf = Vec::new();
    write_to(&mut buf, traj)?;
    Ok(String::from_utf8(buf).expect("csv output is ascii"))
}

pub fn write(path: &Path, traj: &Trajectory) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_to(std::io::BufWriter::new(file), traj)
}

/// Column groups must appear in header order with consecutive indices.
fn parse_header(h: &csv::StringRecord) -> Result<[usize; 4]> {
    let mut fields = h.iter();
    if fields.next() != Some("t") {
        return Err(CliError::Parse("first column must be t".into()));
    }
    let mut dims = [0usize; 4];
    let mut group = 0;
    for name in fields {
        let (prefix, index) = name.split_at(name.find(|c: char| c.is_ascii_digit()).unwrap_or(name.len()));
        let g = ["y", "w", "x", "e"]
            .iter()
            .position(|p| *p == prefix)
            .ok_or_else(|| CliError::Parse(format!("unexpected column {name:?}")))?;
        if g < group {
            return Err(CliError::Parse(format!("column {name:?} out of order")));
        }
        group = g;
        if index.parse::<usize>().ok() != Some(dims[g] + 1) {
            return Err(CliError::Parse(format!("column {name:?} breaks the numbering of {prefix}")));
        }
        dims[g] += 1;
    }
    if dims[0] == 0 || dims[1] == 0 {
        return Err(CliError::Parse("trajectory needs y and w columns".into()));
    }
    Ok(dims)
}

pub fn read_from<R: Read>(input: R) -> Result<Trajectory> {
    let mut r = csv::Reader::from_reader(input);
    let dims = parse_header(r.headers()?)?;
    let width: usize = dims.iter().sum();
    let mut data: [Vec<f64>; 4] = Default::default();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != width + 1 {
            return Err(CliError::Parse(format!("row {} has {} fields, expected {}", row + 1, rec.len(), width + 1)));
        }
        let mut fields = rec.iter().skip(1);
        for (g, &dim) in dims.iter().enumerate() {
            for field in fields.by_ref().take(dim) {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Parse(format!("row {}: {field:?} is not a number", row + 1)))?;
                data[g].push(v);
            }
        }
    }
    let [y, w, x, e] = data;
    let series = |dim: usize, v: Vec<f64>| Series::new(dim, v).map_err(CliError::from);
    let mut traj = Trajectory::new(series(dims[0], y)?, series(dims[1], w)?)?;
    if dims[2] > 0 {
        traj.x = Some(series(dims[2], x)?);
    }
    if dims[3] > 0 {
        traj.e = Some(series(dims[3], e)?);
    }
    traj.check()?;
    Ok(traj)
}

pub fn read(path: &Path) -> Result<Trajectory> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    read_from(std::io::BufReader::new(file))
}
