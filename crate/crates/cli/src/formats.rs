//! On-disk formats: matrix literals (nested JSON arrays of `[re, im]`
//! pairs, row-major), channel records, and the line-delimited record
//! format `field: value` shared by every emitted artifact. Floats are
//! printed with 17 significant digits.

use anyhow::{anyhow, bail, Context, Result};
use pbs_calculus::channels::PurifiedChannel;
use pbs_calculus::linalg::{CMatrix, Ket, C64};
use serde_json::Value;
use std::collections::BTreeMap;

pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

pub fn matrix_to_literal(m: &CMatrix) -> String {
    let mut out = String::from("[");
    for r in 0..m.rows() {
        if r > 0 {
            out.push(',');
        }
        out.push('[');
        for c in 0..m.cols() {
            if c > 0 {
                out.push(',');
            }
            let z = m[(r, c)];
            out.push_str(&format!("[{},{}]", fmt_f64(z.re), fmt_f64(z.im)));
        }
        out.push(']');
    }
    out.push(']');
    out
}

pub fn ket_to_literal(k: &Ket) -> String {
    let mut out = String::from("[");
    for (i, z) in k.amplitudes().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!("[{},{}]", fmt_f64(z.re), fmt_f64(z.im)));
    }
    out.push(']');
    out
}

fn pair_from_value(v: &Value) -> Result<C64> {
    let arr = v.as_array().ok_or_else(|| anyhow!("expected a [re, im] pair"))?;
    if arr.len() != 2 {
        bail!("complex entry must have exactly two components");
    }
    let re = arr[0].as_f64().ok_or_else(|| anyhow!("non-numeric real part"))?;
    let im = arr[1].as_f64().ok_or_else(|| anyhow!("non-numeric imaginary part"))?;
    Ok(C64::new(re, im))
}

pub fn matrix_from_value(v: &Value) -> Result<CMatrix> {
    let rows = v.as_array().ok_or_else(|| anyhow!("matrix literal must be an array of rows"))?;
    let mut data: Vec<Vec<(f64, f64)>> = Vec::with_capacity(rows.len());
    for row in rows {
        let cols = row.as_array().ok_or_else(|| anyhow!("matrix row must be an array"))?;
        let mut out_row = Vec::with_capacity(cols.len());
        for entry in cols {
            let z = pair_from_value(entry)?;
            out_row.push((z.re, z.im));
        }
        data.push(out_row);
    }
    CMatrix::from_rows(&data).map_err(|e| anyhow!("invalid matrix literal: {e}"))
}

pub fn ket_from_value(v: &Value) -> Result<Ket> {
    let entries = v.as_array().ok_or_else(|| anyhow!("vector literal must be an array"))?;
    let mut amps = Vec::with_capacity(entries.len());
    for e in entries {
        amps.push(pair_from_value(e)?);
    }
    Ok(Ket::new(amps))
}

pub fn parse_matrix_literal(text: &str) -> Result<CMatrix> {
    let v: Value = serde_json::from_str(text.trim()).context("matrix literal is not valid JSON")?;
    matrix_from_value(&v)
}

/// Line-delimited record: `field: json-value` per line, `#` comments.
pub fn parse_record(text: &str) -> Result<BTreeMap<String, Value>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| anyhow!("line {}: expected `field: value`", lineno + 1))?;
        let value: Value = serde_json::from_str(value.trim())
            .with_context(|| format!("line {}: malformed value for `{}`", lineno + 1, key.trim()))?;
        out.insert(key.trim().to_string(), value);
    }
    Ok(out)
}

pub fn channel_to_record(ch: &PurifiedChannel) -> String {
    format!(
        "dim_h: {}\ndim_e: {}\nunitary: {}\nenv_state: {}\n",
        ch.dim_h(),
        ch.dim_e(),
        matrix_to_literal(ch.unitary()),
        ket_to_literal(ch.env_state()),
    )
}

pub fn channel_from_record(text: &str) -> Result<PurifiedChannel> {
    let rec = parse_record(text)?;
    let dim_h = rec
        .get("dim_h")
        .and_then(Value::as_u64)
        .ok_or_else(|| anyhow!("channel record needs an integer `dim_h`"))? as usize;
    let dim_e = rec
        .get("dim_e")
        .and_then(Value::as_u64)
        .ok_or_else(|| anyhow!("channel record needs an integer `dim_e`"))? as usize;
    let unitary = matrix_from_value(
        rec.get("unitary").ok_or_else(|| anyhow!("channel record needs `unitary`"))?,
    )?;
    let env_state = ket_from_value(
        rec.get("env_state").ok_or_else(|| anyhow!("channel record needs `env_state`"))?,
    )?;
    PurifiedChannel::new(dim_h, dim_e, unitary, env_state).map_err(|e| anyhow!("invalid channel: {e}"))
}

/// Inline JSON object `{label: {channel record fields}}`.
pub fn assignment_to_inline(gates: &pbs_calculus::qsem::GateAssignment) -> String {
    let mut out = String::from("{");
    for (i, (label, ch)) in gates.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!(
            "\"{}\":{{\"dim_h\":{},\"dim_e\":{},\"unitary\":{},\"env_state\":{}}}",
            label,
            ch.dim_h(),
            ch.dim_e(),
            matrix_to_literal(ch.unitary()),
            ket_to_literal(ch.env_state())
        ));
    }
    out.push('}');
    out
}
