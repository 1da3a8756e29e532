//! Text and CSV helpers. Text rounds to two decimals; CSV keeps full
//! precision.

use std::fmt::Write;

use serde::Serialize;
use serde_json::Value;
use trendhmm::{save_model, HmmModel};

/// Two decimals without a negative zero.
pub fn fmt2(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// `-inf` and `inf` are written out; JSON has no literal for them.
pub fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::from(fmt2(x))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

pub fn model_value(model: &HmmModel) -> Value {
    serde_json::from_slice(&save_model(model)).expect("saved model is JSON")
}

pub fn matrix_text(
    title: &str,
    rows: &[Vec<f64>],
    row_names: &[String],
    cols: &[String],
) -> String {
    let name_w = row_names
        .iter()
        .map(|n| n.chars().count())
        .max()
        .unwrap_or(0);
    let col_w = cols
        .iter()
        .map(|c| c.chars().count())
        .max()
        .unwrap_or(0)
        .max(4);
    let mut out = format!("{title}\n");
    let _ = write!(out, "{:name_w$}", "");
    for c in cols {
        let _ = write!(out, "  {c:>col_w$}");
    }
    out.push('\n');
    for (name, row) in row_names.iter().zip(rows) {
        let _ = write!(out, "{name:<name_w$}");
        for &x in row {
            let _ = write!(out, "  {:>col_w$}", fmt2(x));
        }
        out.push('\n');
    }
    out
}

pub fn model_text(model: &HmmModel) -> String {
    let states = model.states().names();
    let symbols = model.alphabet().symbols();
    let mut out = matrix_text("transition", model.transition().rows(), states, states);
    out.push('\n');
    out.push_str(&matrix_text(
        "emission",
        model.emission().rows(),
        states,
        symbols,
    ));
    out.push('\n');
    out.push_str(&matrix_text(
        "initial",
        &[model.initial().entries().to_vec()],
        &[String::new()],
        states,
    ));
    out
}

/// CSV text from a header and string records.
pub fn csv_table<I, R>(header: &[&str], records: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).expect("in-memory write");
    for record in records {
        writer
            .write_record(record.into_iter().collect::<Vec<_>>())
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Long-form CSV of a model: `matrix,from,to,value`.
pub fn model_csv(model: &HmmModel) -> String {
    let states = model.states().names();
    let symbols = model.alphabet().symbols();
    let mut records = Vec::new();
    for (i, row) in model.transition().rows().iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            records.push(vec![
                "transition".into(),
                states[i].clone(),
                states[j].clone(),
                p.to_string(),
            ]);
        }
    }
    for (i, row) in model.emission().rows().iter().enumerate() {
        for (m, p) in row.iter().enumerate() {
            records.push(vec![
                "emission".into(),
                states[i].clone(),
                symbols[m].clone(),
                p.to_string(),
            ]);
        }
    }
    for (i, p) in model.initial().entries().iter().enumerate() {
        records.push(vec![
            "initial".into(),
            String::new(),
            states[i].clone(),
            p.to_string(),
        ]);
    }
    csv_table(&["matrix", "from", "to", "value"], records)
}
