//! Training dataset: rows of remapped network inputs and true targets, with
//! random 70/15/15 train/validation/test assignment.
//!
//! File format: comma-separated text, one row per 16 Hz sample. The header
//! names the 8 input columns, the 3 target columns and the scenario id:
//!
//! ```text
//! in_vpitot_sq,in_vd_sq,in_vn,in_ve,in_ve_sq,in_vn_sq,in_vpitot_cpsi,in_vpitot_spsi,tgt_vnw,tgt_vew,tgt_cf,scenario
//! ```

use super::{NeuralError, INPUT_DIM, OUTPUT_DIM};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::Path;

pub const DATASET_HEADER: &str = "in_vpitot_sq,in_vd_sq,in_vn,in_ve,in_ve_sq,in_vn_sq,in_vpitot_cpsi,in_vpitot_spsi,tgt_vnw,tgt_vew,tgt_cf,scenario";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    inputs: Vec<[f64; INPUT_DIM]>,
    targets: Vec<[f64; OUTPUT_DIM]>,
    scenario_ids: Vec<String>,
    splits: Vec<Split>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, input: [f64; INPUT_DIM], target: [f64; OUTPUT_DIM], scenario: &str) {
        self.inputs.push(input);
        self.targets.push(target);
        self.scenario_ids.push(scenario.to_string());
        self.splits.clear(); // any previous assignment no longer covers all rows
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input(&self, i: usize) -> &[f64; INPUT_DIM] {
        &self.inputs[i]
    }

    pub fn target(&self, i: usize) -> &[f64; OUTPUT_DIM] {
        &self.targets[i]
    }

    pub fn scenario_id(&self, i: usize) -> &str {
        &self.scenario_ids[i]
    }

    pub fn splits_assigned(&self) -> bool {
        self.splits.len() == self.inputs.len() && !self.inputs.is_empty()
    }

    pub fn split(&self, i: usize) -> Split {
        self.splits[i]
    }

    /// Randomly labels rows 70% train / 15% validation / 15% test.
    /// Rounded sizes differ from the exact fractions by at most one row.
    pub fn assign_splits(&mut self, seed: u64) {
        let n = self.len();
        let n_val = (0.15 * n as f64).round() as usize;
        let n_test = (0.15 * n as f64).round() as usize;
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let mut splits = vec![Split::Train; n];
        for &i in order.iter().take(n_val) {
            splits[i] = Split::Validation;
        }
        for &i in order.iter().skip(n_val).take(n_test) {
            splits[i] = Split::Test;
        }
        self.splits = splits;
    }

    pub fn split_sizes(&self) -> (usize, usize, usize) {
        let mut sizes = (0, 0, 0);
        for s in &self.splits {
            match s {
                Split::Train => sizes.0 += 1,
                Split::Validation => sizes.1 += 1,
                Split::Test => sizes.2 += 1,
            }
        }
        sizes
    }

    pub fn indices_of(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }

    /// Row-major input/target matrices for one split.
    pub(crate) fn matrices_of(&self, split: Split) -> (DMatrix<f64>, DMatrix<f64>) {
        let idx = self.indices_of(split);
        let mut x = DMatrix::zeros(idx.len(), INPUT_DIM);
        let mut t = DMatrix::zeros(idx.len(), OUTPUT_DIM);
        for (row, &i) in idx.iter().enumerate() {
            for j in 0..INPUT_DIM {
                x[(row, j)] = self.inputs[i][j];
            }
            for j in 0..OUTPUT_DIM {
                t[(row, j)] = self.targets[i][j];
            }
        }
        (x, t)
    }

    pub fn save(&self, path: &Path) -> Result<(), NeuralError> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{DATASET_HEADER}")?;
        for i in 0..self.len() {
            let mut fields: Vec<String> = Vec::with_capacity(12);
            fields.extend(self.inputs[i].iter().map(|v| v.to_string()));
            fields.extend(self.targets[i].iter().map(|v| v.to_string()));
            fields.push(self.scenario_ids[i].clone());
            writeln!(out, "{}", fields.join(","))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NeuralError> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == DATASET_HEADER => {}
            Some((_, header)) => {
                return Err(NeuralError::DatasetFormat {
                    line: 1,
                    detail: format!("unexpected header `{header}`"),
                })
            }
            None => return Err(NeuralError::EmptyDataset),
        }
        let mut ds = Dataset::new();
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != INPUT_DIM + OUTPUT_DIM + 1 {
                return Err(NeuralError::DatasetFormat {
                    line: idx + 1,
                    detail: format!("expected 12 fields, got {}", fields.len()),
                });
            }
            let mut input = [0.0; INPUT_DIM];
            let mut target = [0.0; OUTPUT_DIM];
            for (j, slot) in input.iter_mut().chain(target.iter_mut()).enumerate() {
                *slot = fields[j].parse().map_err(|_| NeuralError::DatasetFormat {
                    line: idx + 1,
                    detail: format!("cannot parse `{}` as a number", fields[j]),
                })?;
            }
            ds.push(input, target, fields[INPUT_DIM + OUTPUT_DIM]);
        }
        if ds.is_empty() {
            return Err(NeuralError::EmptyDataset);
        }
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(n: usize) -> Dataset {
        let mut ds = Dataset::new();
        for i in 0..n {
            let v = i as f64;
            ds.push([v; INPUT_DIM], [v, -v, 1.0], "synthetic");
        }
        ds
    }

    #[test]
    fn split_sizes_within_one_of_fractions() {
        for n in [3usize, 7, 10, 20, 100, 1001] {
            let mut ds = synthetic(n);
            ds.assign_splits(42);
            let (tr, va, te) = ds.split_sizes();
            assert_eq!(tr + va + te, n);
            assert!((tr as f64 - 0.70 * n as f64).abs() <= 1.0, "n={n} train={tr}");
            assert!((va as f64 - 0.15 * n as f64).abs() <= 1.0, "n={n} val={va}");
            assert!((te as f64 - 0.15 * n as f64).abs() <= 1.0, "n={n} test={te}");
        }
    }

    #[test]
    fn split_assignment_is_seeded() {
        let mut a = synthetic(100);
        let mut b = synthetic(100);
        a.assign_splits(1);
        b.assign_splits(1);
        for i in 0..100 {
            assert_eq!(a.split(i), b.split(i));
        }
        b.assign_splits(2);
        let differs = (0..100).any(|i| a.split(i) != b.split(i));
        assert!(differs);
    }

    #[test]
    fn file_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let ds = synthetic(10);
        ds.save(&path).unwrap();
        let loaded = Dataset::load(&path).unwrap();
        assert_eq!(loaded.len(), 10);
        assert_eq!(loaded.input(3), ds.input(3));
        assert_eq!(loaded.target(7), ds.target(7));
        assert_eq!(loaded.scenario_id(0), "synthetic");

        // malformed row is reported with its line number
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[3] = "not,a,valid,row";
        std::fs::write(&path, lines.join("\n")).unwrap();
        match Dataset::load(&path) {
            Err(NeuralError::DatasetFormat { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }
}
