use std::io::Write;

use serde::Serialize;

use super::StepSchedule;
use crate::fmt::f17;
use crate::{Error, Result};

/// Full history of one engine run.
///
/// `iterates[k]` holds `x_{k+1}` so the vector covers `x_1..x_{T+1}`;
/// `gradients[k]` is the oracle output at `x_{k+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SgdTrace {
    pub iterates: Vec<Vec<f64>>,
    pub gradients: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// Whether the projection moved `y_{t+1}` at step `t`.
    pub projected: Vec<bool>,
    pub schedule: StepSchedule,
}

impl SgdTrace {
    pub fn steps(&self) -> usize {
        self.gradients.len()
    }

    pub fn dim(&self) -> usize {
        self.iterates.first().map_or(0, Vec::len)
    }

    /// `x_t` for 1-based `t`.
    pub fn iterate(&self, t: usize) -> Option<&[f64]> {
        t.checked_sub(1).and_then(|k| self.iterates.get(k)).map(Vec::as_slice)
    }

    pub fn final_iterate(&self) -> &[f64] {
        self.iterates.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn final_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }

    pub fn projection_count(&self) -> usize {
        self.projected.iter().filter(|&&p| p).count()
    }

    /// Writes `t, x_1..x_d, g_1..g_d, f_value`, one row per iterate.
    ///
    /// The row for `x_{T+1}` has empty gradient cells since no oracle call
    /// is made there.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.dim();
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|j| format!("x_{j}")));
        header.extend((1..=d).map(|j| format!("g_{j}")));
        header.push("f_value".into());
        writeln!(w, "{}", header.join(","))?;
        for (k, x) in self.iterates.iter().enumerate() {
            let mut row = vec![(k + 1).to_string()];
            row.extend(x.iter().map(|&v| f17(v)));
            match self.gradients.get(k) {
                Some(g) => row.extend(g.iter().map(|&v| f17(v))),
                None => row.extend(std::iter::repeat_n(String::new(), d)),
            }
            row.push(f17(self.values[k]));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }
}

/// Arithmetic mean of `x_1..x_{T+1}`.
pub fn running_average(trace: &SgdTrace) -> Result<Vec<f64>> {
    let n = trace.iterates.len();
    if n == 0 {
        return Err(Error::Empty("trace has no iterates"));
    }
    let mut mean = vec![0.0; trace.dim()];
    for x in &trace.iterates {
        mean.iter_mut().zip(x).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    Ok(mean)
}
