//! CSV and JSON files. Every file starts with a `# format_version: 1` line
//! (JSON files carry a `format_version` field instead) and is written to a
//! temporary file in the target directory, then renamed into place.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::coupling::SparseCoupling;
use crate::error::{Error, Result};
use crate::measures::{validate_measure, DiscreteMeasure};
use crate::solver::{PotentialPair, QotProblem};

pub const FORMAT_HEADER: &str = "# format_version: 1\n";

/// Writes `bytes` to `path` through a temporary file and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut buf = FORMAT_HEADER.as_bytes().to_vec();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
    }
    Ok(buf)
}

/// Shortest round-trip rendering, independent of locale.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Parse(format!("{what}: cannot parse {s:?} as a number")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("{what}: non-finite value {s:?}")));
    }
    Ok(v)
}

/// Columns `x1, …, xd, w`.
pub fn parse_measure_csv(text: &str) -> Result<DiscreteMeasure> {
    let mut rdr = reader(text);
    let header = rdr.headers()?.clone();
    let cols = header.len();
    if cols < 2 || &header[cols - 1] != "w" {
        return Err(Error::Parse("measure CSV needs columns x1,..,xd,w".into()));
    }
    for (k, h) in header.iter().take(cols - 1).enumerate() {
        if h != format!("x{}", k + 1) {
            return Err(Error::Parse(format!("unexpected column {h:?}")));
        }
    }
    let dim = cols - 1;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(Error::Parse(format!(
                "row {} has {} fields",
                line + 1,
                rec.len()
            )));
        }
        for k in 0..dim {
            points.push(parse_f64(&rec[k], "coordinate")?);
        }
        weights.push(parse_f64(&rec[dim], "weight")?);
    }
    validate_measure(DiscreteMeasure::from_flat(dim, points, weights)?)
}

pub fn read_measure_csv(path: &Path) -> Result<DiscreteMeasure> {
    parse_measure_csv(&std::fs::read_to_string(path)?)
}

pub fn measure_csv_bytes(m: &DiscreteMeasure) -> Result<Vec<u8>> {
    let mut header: Vec<String> = (1..=m.dim()).map(|k| format!("x{k}")).collect();
    header.push("w".into());
    let rows = m.points().zip(m.weights()).map(|(x, &w)| {
        let mut r: Vec<String> = x.iter().map(|&v| fmt_f64(v)).collect();
        r.push(fmt_f64(w));
        r
    });
    csv_bytes(&header, rows)
}

pub fn write_measure_csv(path: &Path, m: &DiscreteMeasure) -> Result<()> {
    write_atomic(path, &measure_csv_bytes(m)?)
}

/// Rows `side,index,value` with `side ∈ {f, g}` and indices of the caller's
/// original atoms.
pub fn potentials_csv_bytes(problem: &QotProblem, pot: &PotentialPair) -> Result<Vec<u8>> {
    let header = ["side", "index", "value"].map(String::from);
    let f = problem
        .p_index()
        .iter()
        .zip(&pot.f)
        .map(|(i, v)| vec!["f".into(), i.to_string(), fmt_f64(*v)]);
    let g = problem
        .q_index()
        .iter()
        .zip(&pot.g)
        .map(|(j, v)| vec!["g".into(), j.to_string(), fmt_f64(*v)]);
    csv_bytes(&header, f.chain(g))
}

/// Reads potentials written by [`potentials_csv_bytes`] for `problem`.
pub fn parse_potentials_csv(text: &str, problem: &QotProblem) -> Result<PotentialPair> {
    let mut rdr = reader(text);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["side", "index", "value"] {
        return Err(Error::Parse(
            "potentials CSV needs columns side,index,value".into(),
        ));
    }
    let mut f = vec![None; problem.n()];
    let mut g = vec![None; problem.m()];
    for rec in rdr.records() {
        let rec = rec?;
        let idx: usize = rec[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad index {:?}", &rec[1])))?;
        let val = parse_f64(&rec[2], "potential")?;
        let (slots, map) = match &rec[0] {
            "f" => (&mut f, problem.p_index()),
            "g" => (&mut g, problem.q_index()),
            other => return Err(Error::Parse(format!("unknown side {other:?}"))),
        };
        if let Ok(k) = map.binary_search(&idx) {
            slots[k] = Some(val);
        }
    }
    let collect = |v: Vec<Option<f64>>| -> Result<Vec<f64>> {
        v.into_iter()
            .map(|x| x.ok_or_else(|| Error::Parse("potentials file misses an atom".into())))
            .collect()
    };
    Ok(PotentialPair::new(collect(f)?, collect(g)?))
}

/// Rows `i,j,x1..xd,y1..yd,mass,density` on the caller's original indices.
pub fn coupling_csv_bytes(problem: &QotProblem, coupling: &SparseCoupling) -> Result<Vec<u8>> {
    let d = problem.dim();
    let mut header = vec!["i".to_string(), "j".to_string()];
    header.extend((1..=d).map(|k| format!("x{k}")));
    header.extend((1..=d).map(|k| format!("y{k}")));
    header.push("mass".into());
    header.push("density".into());
    let rows = coupling.entries.iter().map(|e| {
        let mut r = vec![
            problem.p_index()[e.i].to_string(),
            problem.q_index()[e.j].to_string(),
        ];
        r.extend(problem.p().point(e.i).iter().map(|&v| fmt_f64(v)));
        r.extend(problem.q().point(e.j).iter().map(|&v| fmt_f64(v)));
        r.push(fmt_f64(e.mass));
        r.push(fmt_f64(e.density));
        r
    });
    csv_bytes(&header, rows)
}

/// Generic numeric table.
pub fn table_csv_bytes(header: &[&str], rows: &[Vec<f64>]) -> Result<Vec<u8>> {
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    csv_bytes(
        &header,
        rows.iter().map(|r| r.iter().map(|&v| fmt_f64(v)).collect()),
    )
}

/// Table whose cells are already rendered.
pub fn string_table_csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    csv_bytes(&header, rows)
}
