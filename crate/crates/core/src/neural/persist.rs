//! Model persistence: a versioned, self-describing text format.
//!
//! ```text
//! mlp-model v1
//! layers 8 24 24 24 3
//! section input_center 8
//! <8 numbers>
//! section input_scale 8
//! ...
//! section w1 24 8
//! <24 lines of 8 numbers, one weight row per line>
//! section b1 24
//! <24 numbers>
//! ... w2, b2, w3, b3, w_out, b_out ...
//! end
//! ```
//!
//! Numbers are written in shortest round-trip decimal form, so a save/load
//! cycle reproduces every parameter bit-exactly.

use super::{FeatureScaling, MlpModel, NeuralError, LAYER_DIMS};
use nalgebra::{DMatrix, DVector};
use std::io::Write;
use std::path::Path;

const MAGIC: &str = "mlp-model v1";

fn fmt_row(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn save_model(model: &MlpModel, path: &Path) -> Result<(), NeuralError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "layers {}", LAYER_DIMS.map(|d| d.to_string()).join(" "))?;

    let scalings = [
        ("input_center", &model.input_scaling().center),
        ("input_scale", &model.input_scaling().scale),
        ("output_center", &model.output_scaling().center),
        ("output_scale", &model.output_scaling().scale),
    ];
    for (name, v) in scalings {
        writeln!(out, "section {name} {}", v.len())?;
        writeln!(out, "{}", fmt_row(v.iter().copied()))?;
    }

    let names = ["w1", "w2", "w3", "w_out"];
    let bias_names = ["b1", "b2", "b3", "b_out"];
    for l in 0..4 {
        let w = &model.weights()[l];
        writeln!(out, "section {} {} {}", names[l], w.nrows(), w.ncols())?;
        for row in 0..w.nrows() {
            writeln!(out, "{}", fmt_row(w.row(row).iter().copied()))?;
        }
        let b = &model.biases()[l];
        writeln!(out, "section {} {}", bias_names[l], b.len())?;
        writeln!(out, "{}", fmt_row(b.iter().copied()))?;
    }
    writeln!(out, "end")?;
    out.flush()?;
    Ok(())
}

struct Reader<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Reader<'a> {
    fn next_line(&mut self, context: &str) -> Result<&'a str, NeuralError> {
        loop {
            match self.lines.next() {
                Some(l) => {
                    self.line_no += 1;
                    let t = l.trim();
                    if !t.is_empty() {
                        return Ok(t);
                    }
                }
                None => {
                    return Err(NeuralError::ModelFormat(format!(
                        "unexpected end of file while reading {context}"
                    )))
                }
            }
        }
    }

    fn numbers(&mut self, context: &str, want: usize) -> Result<Vec<f64>, NeuralError> {
        let line = self.next_line(context)?;
        let vals: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
        let vals = vals.map_err(|_| {
            NeuralError::ModelFormat(format!(
                "line {}: cannot parse numbers in {context}",
                self.line_no
            ))
        })?;
        if vals.len() != want {
            return Err(NeuralError::ModelFormat(format!(
                "line {}: {context} expects {want} values, got {}",
                self.line_no,
                vals.len()
            )));
        }
        Ok(vals)
    }

    fn section_header(&mut self, name: &str, dims: &[usize]) -> Result<(), NeuralError> {
        let context = format!("section `{name}`");
        let line = self.next_line(&context)?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some("section") {
            return Err(NeuralError::ModelFormat(format!(
                "line {}: expected `section {name} ...`, got `{line}`",
                self.line_no
            )));
        }
        if parts.next() != Some(name) {
            return Err(NeuralError::ModelFormat(format!(
                "line {}: expected section `{name}`, got `{line}`",
                self.line_no
            )));
        }
        let found: Vec<usize> = parts.filter_map(|p| p.parse().ok()).collect();
        if found != dims {
            return Err(NeuralError::ModelFormat(format!(
                "line {}: section `{name}` has shape {found:?}, expected {dims:?}",
                self.line_no
            )));
        }
        Ok(())
    }
}

pub fn load_model(path: &Path) -> Result<MlpModel, NeuralError> {
    let text = std::fs::read_to_string(path)?;
    let mut rd = Reader { lines: text.lines(), line_no: 0 };

    let magic = rd.next_line("the header")?;
    if magic != MAGIC {
        return Err(NeuralError::ModelFormat(format!(
            "unsupported header `{magic}`, expected `{MAGIC}`"
        )));
    }
    let layers_line = rd.next_line("the layer list")?;
    let mut parts = layers_line.split_whitespace();
    if parts.next() != Some("layers") {
        return Err(NeuralError::ModelFormat(format!(
            "expected `layers ...`, got `{layers_line}`"
        )));
    }
    let dims: Vec<usize> = parts.filter_map(|p| p.parse().ok()).collect();
    if dims != LAYER_DIMS {
        return Err(NeuralError::ModelFormat(format!(
            "layer widths {dims:?} do not match the expected {:?}",
            LAYER_DIMS.to_vec()
        )));
    }

    let mut scaling_parts = Vec::new();
    for (name, dim) in [
        ("input_center", LAYER_DIMS[0]),
        ("input_scale", LAYER_DIMS[0]),
        ("output_center", LAYER_DIMS[4]),
        ("output_scale", LAYER_DIMS[4]),
    ] {
        rd.section_header(name, &[dim])?;
        scaling_parts.push(DVector::from_vec(rd.numbers(&format!("section `{name}`"), dim)?));
    }

    let names = ["w1", "w2", "w3", "w_out"];
    let bias_names = ["b1", "b2", "b3", "b_out"];
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for l in 0..4 {
        let (rows, cols) = (LAYER_DIMS[l + 1], LAYER_DIMS[l]);
        rd.section_header(names[l], &[rows, cols])?;
        let mut w = DMatrix::zeros(rows, cols);
        for row in 0..rows {
            let vals = rd.numbers(&format!("section `{}` row {row}", names[l]), cols)?;
            for (col, v) in vals.into_iter().enumerate() {
                w[(row, col)] = v;
            }
        }
        weights.push(w);
        rd.section_header(bias_names[l], &[rows])?;
        biases.push(DVector::from_vec(
            rd.numbers(&format!("section `{}`", bias_names[l]), rows)?,
        ));
    }

    let end = rd.next_line("the `end` marker")?;
    if end != "end" {
        return Err(NeuralError::ModelFormat(format!(
            "expected `end`, got `{end}`"
        )));
    }

    let output_scale = scaling_parts.pop().unwrap();
    let output_center = scaling_parts.pop().unwrap();
    let input_scale = scaling_parts.pop().unwrap();
    let input_center = scaling_parts.pop().unwrap();
    for s in input_scale.iter().chain(output_scale.iter()) {
        if !(*s > 0.0) {
            return Err(NeuralError::ModelFormat(
                "normalization scales must be positive".to_string(),
            ));
        }
    }
    let model = MlpModel::from_parts(
        weights,
        biases,
        FeatureScaling { center: input_center, scale: input_scale },
        FeatureScaling { center: output_center, scale: output_scale },
    );
    if !model.is_finite() {
        return Err(NeuralError::ModelFormat(
            "model contains non-finite parameters".to_string(),
        ));
    }
    Ok(model)
}
