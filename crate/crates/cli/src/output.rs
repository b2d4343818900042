use std::io::Write;

use anyhow::Result;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One output row. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub command: String,
    pub model: String,
    pub theta_deg: Option<f64>,
    pub quantity: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub analytic: Option<f64>,
    pub z_score: Option<f64>,
    pub n: u64,
    pub seed: u64,
}

impl OutputRecord {
    pub fn new(command: &str, model: &str, quantity: impl Into<String>, value: f64, n: u64, seed: u64) -> Self {
        Self {
            command: command.to_owned(),
            model: model.to_owned(),
            theta_deg: None,
            quantity: quantity.into(),
            value,
            std_error: None,
            analytic: None,
            z_score: None,
            n,
            seed,
        }
    }

    pub fn theta(mut self, deg: f64) -> Self {
        self.theta_deg = Some(deg);
        self
    }

    pub fn std_error(mut self, se: f64) -> Self {
        self.std_error = Some(se);
        self.refresh_z();
        self
    }

    pub fn analytic(mut self, reference: f64) -> Self {
        self.analytic = Some(reference);
        self.refresh_z();
        self
    }

    fn refresh_z(&mut self) {
        if let (Some(se), Some(reference)) = (self.std_error, self.analytic) {
            let z = hvlab_core::estimator::z_score(self.value - reference, se);
            // Non-finite z (zero error, nonzero deviation) has no CSV/JSON form.
            self.z_score = z.is_finite().then_some(z);
        }
    }
}

pub fn write_records<W: Write>(out: W, format: Format, records: &[OutputRecord]) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, records)?;
            writeln!(out)?;
        }
    }
    Ok(())
}
