use super::Tensor4;
use crate::error::{Error, Result};

/// Per-channel `scale * x + shift`, the learnable stand-in for normalisation.
pub fn channel_affine(x: &Tensor4, scale: &[f64], shift: &[f64]) -> Result<Tensor4> {
    let [n, c, h, w] = x.dims();
    if scale.len() != c || shift.len() != c {
        return Err(Error::Shape(format!(
            "channel_affine: {c} channels but scale {} / shift {}",
            scale.len(),
            shift.len()
        )));
    }
    let plane = h * w;
    let mut out = x.clone();
    for (i, chunk) in out.data_mut().chunks_exact_mut(plane).enumerate() {
        let ch = i % c;
        for v in chunk {
            *v = scale[ch] * *v + shift[ch];
        }
    }
    debug_assert_eq!(out.len(), n * c * plane);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineGrads {
    pub input: Tensor4,
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
}

pub fn channel_affine_backward(x: &Tensor4, scale: &[f64], upstream: &Tensor4) -> Result<AffineGrads> {
    x.same_dims(upstream, "channel_affine adjoint")?;
    let [_, c, h, w] = x.dims();
    if scale.len() != c {
        return Err(Error::Shape(format!(
            "channel_affine: {c} channels but scale {}",
            scale.len()
        )));
    }
    let plane = h * w;
    let mut input = upstream.clone();
    let mut gs = vec![0.0; c];
    let mut gb = vec![0.0; c];
    for (i, (gin, xs)) in input
        .data_mut()
        .chunks_exact_mut(plane)
        .zip(x.data().chunks_exact(plane))
        .enumerate()
    {
        let ch = i % c;
        for (g, v) in gin.iter_mut().zip(xs) {
            gs[ch] += *g * v;
            gb[ch] += *g;
            *g *= scale[ch];
        }
    }
    Ok(AffineGrads {
        input,
        scale: gs,
        shift: gb,
    })
}

/// Elementwise sum of two equally shaped tensors (residual join).
pub fn add(a: &Tensor4, b: &Tensor4) -> Result<Tensor4> {
    a.same_dims(b, "add")?;
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect();
    Tensor4::new(a.dims(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_scales_per_channel() {
        let x = Tensor4::filled([1, 2, 1, 2], 2.0);
        let y = channel_affine(&x, &[1.0, -0.5], &[0.5, 0.0]).unwrap();
        assert_eq!(y.data(), &[2.5, 2.5, -1.0, -1.0]);
    }

    #[test]
    fn add_requires_same_dims() {
        assert!(add(&Tensor4::zeros([1, 1, 2, 2]), &Tensor4::zeros([1, 2, 2, 1])).is_err());
    }
}
