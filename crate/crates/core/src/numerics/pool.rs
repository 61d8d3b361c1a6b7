use super::{ensure_finite, Tensor4};
use crate::error::{Error, Result};

/// Mean over each `H x W` plane; output is `[N, C, 1, 1]`, so batch item `n`
/// is the pooled channel vector `item(n)`.
pub fn global_avg_pool(x: &Tensor4) -> Result<Tensor4> {
    let [n, c, h, w] = x.dims();
    if h == 0 || w == 0 {
        return Err(Error::Shape("global_avg_pool: empty spatial extent".into()));
    }
    ensure_finite(x.data(), "global_avg_pool input")?;
    let plane = h * w;
    let data = x
        .data()
        .chunks_exact(plane)
        .map(|p| p.iter().sum::<f64>() / plane as f64)
        .collect();
    Tensor4::new([n, c, 1, 1], data)
}

/// Spreads each pooled adjoint uniformly over its plane.
pub fn global_avg_pool_backward(input_dims: [usize; 4], upstream: &Tensor4) -> Result<Tensor4> {
    let [n, c, h, w] = input_dims;
    if upstream.dims() != [n, c, 1, 1] {
        return Err(Error::Shape(format!(
            "global_avg_pool adjoint dims {:?} != [{n}, {c}, 1, 1]",
            upstream.dims()
        )));
    }
    if h == 0 || w == 0 {
        return Err(Error::Shape("global_avg_pool: empty spatial extent".into()));
    }
    let plane = h * w;
    let scale = 1.0 / plane as f64;
    let mut data = Vec::with_capacity(n * c * plane);
    for g in upstream.data() {
        data.extend(std::iter::repeat_n(g * scale, plane));
    }
    Tensor4::new(input_dims, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_map_pools_to_constant() {
        let x = Tensor4::filled([2, 3, 4, 5], 1.75);
        let y = global_avg_pool(&x).unwrap();
        assert_eq!(y.dims(), [2, 3, 1, 1]);
        assert!(y.data().iter().all(|&v| v == 1.75));
    }

    #[test]
    fn one_to_forty_nine() {
        let x = Tensor4::from_fn([1, 1, 7, 7], |_, _, h, w| (h * 7 + w + 1) as f64);
        assert_eq!(global_avg_pool(&x).unwrap().data(), &[25.0]);
    }

    #[test]
    fn empty_extent_is_an_error() {
        assert!(global_avg_pool(&Tensor4::zeros([1, 2, 0, 3])).is_err());
    }
}
