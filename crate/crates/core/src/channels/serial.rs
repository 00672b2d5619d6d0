use faer::Mat;
use serde::{Deserialize, Serialize};

use super::QuantumChannel;
use crate::error::{Error, Result};
use crate::qcore::linalg::c64;

/// JSON form of a channel: `kraus[m][row][col] = [re, im]`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus: Vec<Vec<Vec<[f64; 2]>>>,
}

impl ChannelFile {
    pub fn from_channel(ch: &QuantumChannel) -> Self {
        let kraus = ch
            .kraus_ops()
            .map(|k| {
                (0..k.nrows())
                    .map(|r| (0..k.ncols()).map(|c| [k[(r, c)].re, k[(r, c)].im]).collect())
                    .collect()
            })
            .collect();
        Self { dim_in: ch.dim_in(), dim_out: ch.dim_out(), kraus }
    }

    pub fn to_channel(&self) -> Result<QuantumChannel> {
        let mut ops = Vec::with_capacity(self.kraus.len());
        for (m, k) in self.kraus.iter().enumerate() {
            if k.len() != self.dim_out {
                return Err(Error::mismatch(self.dim_out, k.len()));
            }
            if let Some(row) = k.iter().find(|row| row.len() != self.dim_in) {
                return Err(Error::InvalidParameter(format!(
                    "Kraus operator {m}: row of length {} but dim_in = {}",
                    row.len(),
                    self.dim_in
                )));
            }
            ops.push(Mat::from_fn(self.dim_out, self.dim_in, |r, c| {
                let [re, im] = k[r][c];
                c64::new(re, im)
            }));
        }
        QuantumChannel::new(self.dim_in, self.dim_out, ops)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
