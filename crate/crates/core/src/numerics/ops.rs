//! Forward/backward pairs for the fixed operator set of the point network.
//!
//! Affine layers accept any tensor of rank >= 2 and act on the last axis,
//! treating all leading axes as a flattened row axis. This is how the shared
//! per-point MLP is applied to `[m x g x c]` grouped inputs.

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// `out[i, j] = sum_k input[i, k] * weight[k, j] + bias[j]`.
pub fn affine_forward(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    check_affine(input, weight, bias)?;
    let d_in = weight.shape()[0];
    let d_out = weight.shape()[1];
    let rows = input.rows();
    let w = weight.data();
    let b = bias.data();
    let mut out = vec![0.0f32; rows * d_out];
    for (x, o) in input
        .data()
        .chunks_exact(d_in)
        .zip(out.chunks_exact_mut(d_out))
    {
        o.copy_from_slice(b);
        for (k, &xk) in x.iter().enumerate() {
            if xk == 0.0 {
                continue;
            }
            let wk = &w[k * d_out..(k + 1) * d_out];
            for (oj, &wj) in o.iter_mut().zip(wk) {
                *oj += xk * wj;
            }
        }
    }
    let mut shape = input.shape().to_vec();
    *shape.last_mut().unwrap() = d_out;
    Tensor::new(shape, out)
}

fn check_affine(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<()> {
    if weight.rank() != 2 || input.rank() < 2 || input.cols() != weight.shape()[0] {
        return Err(Error::Dimension {
            op: "affine",
            left: input.shape().to_vec(),
            right: weight.shape().to_vec(),
        });
    }
    if bias.rank() != 1 || bias.len() != weight.shape()[1] {
        return Err(Error::Dimension {
            op: "affine bias",
            left: weight.shape().to_vec(),
            right: bias.shape().to_vec(),
        });
    }
    Ok(())
}

/// Gradients of an affine layer.
#[derive(Debug, Clone)]
pub struct AffineGrads {
    /// `None` when the caller did not ask for the input gradient.
    pub input: Option<Tensor>,
    pub weight: Tensor,
    pub bias: Tensor,
}

pub fn affine_backward(
    input: &Tensor,
    weight: &Tensor,
    grad_out: &Tensor,
    need_input_grad: bool,
) -> Result<AffineGrads> {
    let d_in = weight.shape()[0];
    let d_out = weight.shape()[1];
    if input.cols() != d_in || grad_out.cols() != d_out || input.rows() != grad_out.rows() {
        return Err(Error::Dimension {
            op: "affine_backward",
            left: input.shape().to_vec(),
            right: grad_out.shape().to_vec(),
        });
    }
    let mut dw = vec![0.0f32; d_in * d_out];
    let mut db = vec![0.0f32; d_out];
    for (x, g) in input
        .data()
        .chunks_exact(d_in)
        .zip(grad_out.data().chunks_exact(d_out))
    {
        for (dbj, &gj) in db.iter_mut().zip(g) {
            *dbj += gj;
        }
        for (k, &xk) in x.iter().enumerate() {
            if xk == 0.0 {
                continue;
            }
            let row = &mut dw[k * d_out..(k + 1) * d_out];
            for (d, &gj) in row.iter_mut().zip(g) {
                *d += xk * gj;
            }
        }
    }

    let d_input = if need_input_grad {
        // dX = dY W^T, computed against the transposed weight so the inner
        // loop runs over contiguous memory.
        let w = weight.data();
        let mut wt = vec![0.0f32; d_out * d_in];
        for k in 0..d_in {
            for j in 0..d_out {
                wt[j * d_in + k] = w[k * d_out + j];
            }
        }
        let mut dx = vec![0.0f32; input.len()];
        for (g, dxr) in grad_out
            .data()
            .chunks_exact(d_out)
            .zip(dx.chunks_exact_mut(d_in))
        {
            for (j, &gj) in g.iter().enumerate() {
                if gj == 0.0 {
                    continue;
                }
                let wtj = &wt[j * d_in..(j + 1) * d_in];
                for (d, &wv) in dxr.iter_mut().zip(wtj) {
                    *d += gj * wv;
                }
            }
        }
        Some(Tensor::new(input.shape().to_vec(), dx)?)
    } else {
        None
    };

    Ok(AffineGrads {
        input: d_input,
        weight: Tensor::new(vec![d_in, d_out], dw)?,
        bias: Tensor::new(vec![d_out], db)?,
    })
}

pub fn relu_forward(input: &Tensor) -> Tensor {
    input.map(|v| v.max(0.0))
}

/// Backward through ReLU given its *output*; gradient passes where output > 0.
pub fn relu_backward(output: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    if output.shape() != grad_out.shape() {
        return Err(Error::Dimension {
            op: "relu_backward",
            left: output.shape().to_vec(),
            right: grad_out.shape().to_vec(),
        });
    }
    let data = output
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&y, &g)| if y > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::new(output.shape().to_vec(), data)
}

/// Max over the neighbor axis of an `[m x g x c]` tensor.
///
/// Returns the `[m x c]` maxima and, per output element, the neighbor index
/// that produced it. Ties resolve to the smallest neighbor index.
pub fn neighbor_max_reduce(input: &Tensor) -> Result<(Tensor, Vec<u32>)> {
    if input.rank() != 3 {
        return Err(Error::Dimension {
            op: "neighbor_max_reduce",
            left: input.shape().to_vec(),
            right: vec![0, 0, 0],
        });
    }
    let (m, g, c) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    if g == 0 {
        return Err(Error::EmptyNeighborhood);
    }
    let data = input.data();
    let mut out = vec![0.0f32; m * c];
    let mut arg = vec![0u32; m * c];
    for i in 0..m {
        let block = &data[i * g * c..(i + 1) * g * c];
        let o = &mut out[i * c..(i + 1) * c];
        let a = &mut arg[i * c..(i + 1) * c];
        o.copy_from_slice(&block[..c]);
        for j in 1..g {
            let row = &block[j * c..(j + 1) * c];
            for k in 0..c {
                if row[k] > o[k] {
                    o[k] = row[k];
                    a[k] = j as u32;
                }
            }
        }
    }
    Ok((Tensor::new(vec![m, c], out)?, arg))
}

/// Routes each output gradient to the neighbor recorded in `argmax`.
pub fn neighbor_max_backward(grad_out: &Tensor, argmax: &[u32], group: usize) -> Result<Tensor> {
    if grad_out.rank() != 2 || argmax.len() != grad_out.len() || group == 0 {
        return Err(Error::Dimension {
            op: "neighbor_max_backward",
            left: grad_out.shape().to_vec(),
            right: vec![argmax.len()],
        });
    }
    let (m, c) = (grad_out.shape()[0], grad_out.shape()[1]);
    let mut dx = vec![0.0f32; m * group * c];
    for i in 0..m {
        for k in 0..c {
            let j = argmax[i * c + k] as usize;
            dx[(i * group + j) * c + k] += grad_out.data()[i * c + k];
        }
    }
    Tensor::new(vec![m, group, c], dx)
}

/// Mean softmax cross-entropy over a `[b x C]` batch, with its gradient.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f32, Tensor)> {
    if logits.rank() != 2 || logits.shape()[0] != labels.len() {
        return Err(Error::Dimension {
            op: "softmax_cross_entropy",
            left: logits.shape().to_vec(),
            right: vec![labels.len()],
        });
    }
    let classes = logits.shape()[1];
    let batch = labels.len();
    let inv_b = 1.0 / batch as f32;
    let mut grad = vec![0.0f32; logits.len()];
    let mut total = 0.0f32;
    for (i, (row, &label)) in logits.data().chunks_exact(classes).zip(labels).enumerate() {
        if label >= classes {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        let g = &mut grad[i * classes..(i + 1) * classes];
        let mut sum = 0.0f32;
        for (gk, &v) in g.iter_mut().zip(row) {
            *gk = (v - max).exp();
            sum += *gk;
        }
        total += max + sum.ln() - row[label];
        for gk in g.iter_mut() {
            *gk = *gk / sum * inv_b;
        }
        g[label] -= inv_b;
    }
    let loss = total * inv_b;
    if !loss.is_finite() {
        return Err(Error::NonFinite("softmax_cross_entropy".into()));
    }
    Ok((loss, Tensor::new(logits.shape().to_vec(), grad)?))
}
