//! Closed-form operation counts.
//!
//! Conventions: an affine layer over `rows` inputs costs
//! `2 * rows * d_in * d_out` (one multiply and one add per weight use) plus
//! `rows * d_out` bias adds. ReLU costs one comparison per output element and
//! a max reduction one comparison per input element. Sampling and grouping
//! are geometric preprocessing, independent of channel widths, and are not
//! counted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NetworkSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Affine,
    Relu,
    MaxReduce,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFlops {
    pub name: String,
    pub kind: OpKind,
    pub rows: u64,
    pub d_in: u64,
    pub d_out: u64,
    pub flops: u64,
    pub params: u64,
    /// Affine layer inside an SA block whose input comes from another
    /// affine layer of the same MLP (both sides prunable).
    pub interior: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopsReport {
    pub layers: Vec<LayerFlops>,
    pub total_flops: u64,
    pub total_params: u64,
}

impl FlopsReport {
    /// Percentage of `reference`'s total removed in `self`.
    pub fn reduction_pct(&self, reference: &FlopsReport) -> f64 {
        pct_drop(self.total_flops, reference.total_flops)
    }

    pub fn interior_flops(&self) -> u64 {
        self.layers.iter().filter(|l| l.interior).map(|l| l.flops).sum()
    }

    /// Reduction restricted to interior MLP layers.
    pub fn interior_reduction_pct(&self, reference: &FlopsReport) -> f64 {
        pct_drop(self.interior_flops(), reference.interior_flops())
    }

    pub fn param_reduction_pct(&self, reference: &FlopsReport) -> f64 {
        pct_drop(self.total_params, reference.total_params)
    }
}

/// `100 * (1 - now / before)`, or 0 when `before` is 0.
pub fn pct_drop(now: u64, before: u64) -> f64 {
    if before == 0 {
        return 0.0;
    }
    100.0 * (1.0 - now as f64 / before as f64)
}

fn affine(name: String, rows: u64, d_in: u64, d_out: u64, interior: bool) -> LayerFlops {
    LayerFlops {
        name,
        kind: OpKind::Affine,
        rows,
        d_in,
        d_out,
        flops: 2 * rows * d_in * d_out + rows * d_out,
        params: d_in * d_out + d_out,
        interior,
    }
}

fn elementwise(name: String, kind: OpKind, rows: u64, d: u64) -> LayerFlops {
    LayerFlops {
        name,
        kind,
        rows,
        d_in: d,
        d_out: d,
        flops: rows * d,
        params: 0,
        interior: false,
    }
}

pub fn count_flops(spec: &NetworkSpec, points_per_cloud: usize) -> Result<FlopsReport> {
    spec.validate()?;
    if points_per_cloud < spec.blocks[0].n_out {
        return Err(Error::InvalidInput(format!(
            "{points_per_cloud} points cannot feed {} centroids",
            spec.blocks[0].n_out
        )));
    }
    let mut layers = Vec::new();
    for (b, block) in spec.blocks.iter().enumerate() {
        let m = block.n_out as u64;
        let g = block.group_size as u64;
        let rows = m * g;
        for l in 0..block.num_layers() {
            let (d_in, d_out) = (block.mlp[l] as u64, block.mlp[l + 1] as u64);
            layers.push(affine(format!("sa{b}.mlp{l}"), rows, d_in, d_out, l > 0));
            layers.push(elementwise(format!("sa{b}.mlp{l}.relu"), OpKind::Relu, rows, d_out));
        }
        layers.push(elementwise(
            format!("sa{b}.maxpool"),
            OpKind::MaxReduce,
            rows,
            block.out_channels() as u64,
        ));
    }
    let last = spec.blocks.last().unwrap();
    let c = spec.final_channels() as u64;
    let (h, k) = (spec.head.hidden as u64, spec.head.num_classes as u64);
    layers.push(elementwise("head.pool".into(), OpKind::MaxReduce, last.n_out as u64, c));
    layers.push(affine("head.fc1".into(), 1, c, h, false));
    layers.push(elementwise("head.fc1.relu".into(), OpKind::Relu, 1, h));
    layers.push(affine("head.fc2".into(), 1, h, k, false));

    let total_flops = layers.iter().map(|l| l.flops).sum();
    let total_params = layers.iter().map(|l| l.params).sum();
    Ok(FlopsReport {
        layers,
        total_flops,
        total_params,
    })
}
