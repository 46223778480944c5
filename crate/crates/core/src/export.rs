//! CSV and JSON forms of frontiers, frequency responses and oracle reports.
//!
//! Numbers are written with 12 significant digits in the shortest of fixed
//! or exponential notation, `.` as decimal separator and `\n` line endings,
//! so identical runs produce identical bytes on every platform.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::frontier::Frontier;
use crate::model::{RatePair, SchemeId};
use crate::schemes::param_names;
use crate::spectra::{frequency_response_table, ArmaSpectrum};

/// Default number of frequencies in a frequency-response table.
pub const FREQ_RESPONSE_POINTS: usize = 512;

/// `x` with 12 significant digits, like C's `%.12g`.
pub fn format_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn frontier_csv(f: &Frontier) -> String {
    let mut out = String::from("r1,r2\n");
    for p in f.points() {
        out.push_str(&format_g12(p.r1));
        out.push(',');
        out.push_str(&format_g12(p.r2));
        out.push('\n');
    }
    out
}

/// Reads an `r1,r2` CSV back into a frontier (points carry no provenance).
pub fn parse_frontier_csv(text: &str) -> Result<Frontier> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "r1" || &headers[1] != "r2" {
        return Err(Error::Parse(format!(
            "expected header 'r1,r2', got '{}'",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut pts = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("row {}: {e}", i + 2)))?;
        let num = |j: usize| -> Result<f64> {
            rec.get(j)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::Parse(format!("row {}: column {} is not a number", i + 2, j + 1)))
        };
        let (r1, r2) = (num(0)?, num(1)?);
        if !(r1.is_finite() && r2.is_finite() && r1 >= 0.0 && r2 >= 0.0) {
            return Err(Error::Parse(format!("row {}: rates must be finite and non-negative", i + 2)));
        }
        pts.push(RatePair::bare(r1, r2));
    }
    if pts.is_empty() {
        return Err(Error::Empty("frontier CSV"));
    }
    Ok(Frontier::from_points(pts))
}

/// Truncation order of a flat parameter vector (only the cosine-series
/// scheme has one).
fn cos_order(scheme: SchemeId, len: usize) -> usize {
    match scheme {
        SchemeId::Theorem2 => len.saturating_sub(3) / 4,
        _ => 0,
    }
}

/// One JSON object per frontier point: rates, scheme, named parameters and
/// which vertex of the parameter point's region it is.
pub fn provenance_json(f: &Frontier) -> Value {
    let rows: Vec<Value> = f
        .points()
        .iter()
        .map(|p| {
            let prov = &p.provenance;
            let names = param_names(prov.scheme, cos_order(prov.scheme, prov.params.len()));
            let params: Map<String, Value> =
                names.into_iter().zip(&prov.params).map(|(n, v)| (n, Value::from(*v))).collect();
            let mut o = Map::new();
            o.insert("r1".into(), Value::from(p.r1));
            o.insert("r2".into(), Value::from(p.r2));
            o.insert("scheme".into(), Value::from(prov.scheme.as_str()));
            o.insert("params".into(), Value::Object(params));
            o.insert("vertex".into(), Value::from(prov.vertex));
            Value::Object(o)
        })
        .collect();
    Value::Array(rows)
}

/// Flat parameter vector from a provenance record's named map.
pub fn params_from_json(scheme: SchemeId, params: &Map<String, Value>) -> Result<Vec<f64>> {
    let names = param_names(scheme, cos_order(scheme, params.len()));
    if names.len() != params.len() {
        return Err(Error::DimensionMismatch(format!(
            "{scheme} takes {} parameters, got {}",
            names.len(),
            params.len()
        )));
    }
    names
        .iter()
        .map(|n| {
            params
                .get(n)
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Parse(format!("parameter '{n}' missing or not a number")))
        })
        .collect()
}

pub fn frequency_response_csv(spec: &ArmaSpectrum, points: usize) -> String {
    let mut out = String::from("omega,magnitude\n");
    for (w, m) in frequency_response_table(spec, points) {
        out.push_str(&format_g12(w));
        out.push(',');
        out.push_str(&format_g12(m));
        out.push('\n');
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
