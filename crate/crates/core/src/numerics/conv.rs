use serde::{Deserialize, Serialize};

use super::{ensure_finite, Tensor4};
use crate::error::{Error, Result};

/// Geometry of a square-kernel 2-D convolution with zero padding.
///
/// Depthwise convolution is `groups == in_channels`; `out_channels` may be a
/// multiple of it (channel multiplier).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub groups: usize,
    pub dilation: usize,
    pub bias: bool,
}

impl ConvSpec {
    /// Dense convolution, stride 1, "same" padding for odd kernels, with bias.
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel,
            stride: 1,
            padding: kernel / 2,
            groups: 1,
            dilation: 1,
            bias: true,
        }
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn padding(mut self, padding: usize) -> Self {
        self.padding = padding;
        self
    }

    pub fn groups(mut self, groups: usize) -> Self {
        self.groups = groups;
        self
    }

    /// Sets dilation and the matching "same" padding for the kernel.
    pub fn dilation(mut self, dilation: usize) -> Self {
        self.dilation = dilation;
        self.padding = dilation * (self.kernel / 2);
        self
    }

    pub fn bias(mut self, bias: bool) -> Self {
        self.bias = bias;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("in_channels", self.in_channels),
            ("out_channels", self.out_channels),
            ("kernel", self.kernel),
            ("stride", self.stride),
            ("groups", self.groups),
            ("dilation", self.dilation),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("conv {name} must be positive")));
            }
        }
        if self.kernel % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "conv kernel must be odd, got {}",
                self.kernel
            )));
        }
        if self.in_channels % self.groups != 0 || self.out_channels % self.groups != 0 {
            return Err(Error::InvalidArgument(format!(
                "conv channels {}->{} not divisible by groups {}",
                self.in_channels, self.out_channels, self.groups
            )));
        }
        Ok(())
    }

    pub fn weight_len(&self) -> usize {
        self.out_channels * (self.in_channels / self.groups) * self.kernel * self.kernel
    }

    pub fn bias_len(&self) -> usize {
        if self.bias {
            self.out_channels
        } else {
            0
        }
    }

    /// Multiply-accumulates per output element.
    pub fn macs_per_output(&self) -> usize {
        (self.in_channels / self.groups) * self.kernel * self.kernel
    }

    pub fn output_hw(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        let h = conv_output_len(height, self.kernel, self.stride, self.padding, self.dilation);
        let w = conv_output_len(width, self.kernel, self.stride, self.padding, self.dilation);
        match (h, w) {
            (Some(h), Some(w)) => Ok((h, w)),
            _ => Err(Error::Shape(format!(
                "conv input {height}x{width} too small for kernel {} dilation {} padding {}",
                self.kernel, self.dilation, self.padding
            ))),
        }
    }
}

/// `floor((len + 2*pad - dilation*(kernel-1) - 1) / stride) + 1`, or `None`
/// when the dilated kernel does not fit.
pub fn conv_output_len(
    len: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
    dilation: usize,
) -> Option<usize> {
    let span = dilation * (kernel - 1) + 1;
    let padded = len + 2 * padding;
    if len == 0 || padded < span || stride == 0 {
        return None;
    }
    Some((padded - span) / stride + 1)
}

/// Range of output columns `o` for which `o*stride + tap - pad` lands in `[0, len)`.
#[inline]
fn valid_range(out_len: usize, len: usize, stride: usize, tap: usize, pad: usize) -> (usize, usize) {
    // o*stride + tap >= pad
    let lo = if tap >= pad {
        0
    } else {
        (pad - tap).div_ceil(stride)
    };
    // o*stride + tap - pad <= len - 1
    let hi = if tap > pad + len - 1 {
        0
    } else {
        ((pad + len - 1 - tap) / stride + 1).min(out_len)
    };
    (lo.min(hi), hi)
}

struct Geometry {
    batch: usize,
    in_h: usize,
    in_w: usize,
    out_h: usize,
    out_w: usize,
    cin_g: usize,
    cout_g: usize,
}

fn check(x: &Tensor4, spec: &ConvSpec, weights: &[f64], bias: &[f64]) -> Result<Geometry> {
    spec.validate()?;
    if x.channels() != spec.in_channels {
        return Err(Error::Shape(format!(
            "conv2d expects {} input channels, got {}",
            spec.in_channels,
            x.channels()
        )));
    }
    if weights.len() != spec.weight_len() {
        return Err(Error::Shape(format!(
            "conv2d weight length {} != {}",
            weights.len(),
            spec.weight_len()
        )));
    }
    if bias.len() != spec.bias_len() {
        return Err(Error::Shape(format!(
            "conv2d bias length {} != {}",
            bias.len(),
            spec.bias_len()
        )));
    }
    let (out_h, out_w) = spec.output_hw(x.height(), x.width())?;
    Ok(Geometry {
        batch: x.batch(),
        in_h: x.height(),
        in_w: x.width(),
        out_h,
        out_w,
        cin_g: spec.in_channels / spec.groups,
        cout_g: spec.out_channels / spec.groups,
    })
}

/// Direct-summation grouped, strided, dilated convolution.
pub fn conv2d(x: &Tensor4, spec: &ConvSpec, weights: &[f64], bias: &[f64]) -> Result<Tensor4> {
    let g = check(x, spec, weights, bias)?;
    ensure_finite(x.data(), "conv2d input")?;
    let k = spec.kernel;
    let (s, d, p) = (spec.stride, spec.dilation, spec.padding);
    let in_plane = g.in_h * g.in_w;
    let out_plane = g.out_h * g.out_w;
    let mut out = Tensor4::zeros([g.batch, spec.out_channels, g.out_h, g.out_w]);
    let xd = x.data();
    let od = out.data_mut();

    for b in 0..g.batch {
        for oc in 0..spec.out_channels {
            let group = oc / g.cout_g;
            let dst = &mut od[(b * spec.out_channels + oc) * out_plane..][..out_plane];
            if spec.bias {
                dst.fill(bias[oc]);
            }
            for icl in 0..g.cin_g {
                let ic = group * g.cin_g + icl;
                let src = &xd[(b * spec.in_channels + ic) * in_plane..][..in_plane];
                let wbase = (oc * g.cin_g + icl) * k * k;
                for kh in 0..k {
                    let (oy0, oy1) = valid_range(g.out_h, g.in_h, s, kh * d, p);
                    for kw in 0..k {
                        let wv = weights[wbase + kh * k + kw];
                        let (ox0, ox1) = valid_range(g.out_w, g.in_w, s, kw * d, p);
                        for oy in oy0..oy1 {
                            let iy = oy * s + kh * d - p;
                            let row = &src[iy * g.in_w..][..g.in_w];
                            let orow = &mut dst[oy * g.out_w..][..g.out_w];
                            for ox in ox0..ox1 {
                                orow[ox] += wv * row[ox * s + kw * d - p];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads {
    pub input: Tensor4,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Adjoint of [`conv2d`] given the upstream adjoint on its output.
pub fn conv2d_backward(
    x: &Tensor4,
    spec: &ConvSpec,
    weights: &[f64],
    upstream: &Tensor4,
) -> Result<ConvGrads> {
    let bias_shape = vec![0.0; spec.bias_len()];
    let g = check(x, spec, weights, &bias_shape)?;
    let expected = [g.batch, spec.out_channels, g.out_h, g.out_w];
    if upstream.dims() != expected {
        return Err(Error::Shape(format!(
            "conv2d adjoint dims {:?} != output dims {expected:?}",
            upstream.dims()
        )));
    }
    let k = spec.kernel;
    let (s, d, p) = (spec.stride, spec.dilation, spec.padding);
    let in_plane = g.in_h * g.in_w;
    let out_plane = g.out_h * g.out_w;
    let mut gin = Tensor4::zeros(x.dims());
    let mut gw = vec![0.0; weights.len()];
    let mut gb = vec![0.0; spec.bias_len()];
    let xd = x.data();
    let ud = upstream.data();
    let gid = gin.data_mut();

    for b in 0..g.batch {
        for oc in 0..spec.out_channels {
            let group = oc / g.cout_g;
            let up = &ud[(b * spec.out_channels + oc) * out_plane..][..out_plane];
            if spec.bias {
                gb[oc] += up.iter().sum::<f64>();
            }
            for icl in 0..g.cin_g {
                let ic = group * g.cin_g + icl;
                let base = (b * spec.in_channels + ic) * in_plane;
                let wbase = (oc * g.cin_g + icl) * k * k;
                for kh in 0..k {
                    let (oy0, oy1) = valid_range(g.out_h, g.in_h, s, kh * d, p);
                    for kw in 0..k {
                        let wv = weights[wbase + kh * k + kw];
                        let (ox0, ox1) = valid_range(g.out_w, g.in_w, s, kw * d, p);
                        let mut acc = 0.0;
                        for oy in oy0..oy1 {
                            let iy = oy * s + kh * d - p;
                            let urow = &up[oy * g.out_w..][..g.out_w];
                            let row = base + iy * g.in_w;
                            for ox in ox0..ox1 {
                                let ix = row + ox * s + kw * d - p;
                                acc += urow[ox] * xd[ix];
                                gid[ix] += wv * urow[ox];
                            }
                        }
                        gw[wbase + kh * k + kw] += acc;
                    }
                }
            }
        }
    }
    Ok(ConvGrads {
        input: gin,
        weights: gw,
        bias: gb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_kernel_copies_input() {
        let x = Tensor4::from_fn([1, 1, 4, 5], |_, _, h, w| (h * 5 + w) as f64 - 3.5);
        let spec = ConvSpec::new(1, 1, 1);
        let y = conv2d(&x, &spec, &[1.0], &[0.0]).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn all_ones_kernel_sums_window() {
        let x = Tensor4::filled([1, 1, 3, 3], 1.0);
        let spec = ConvSpec::new(1, 1, 3).padding(0).bias(false);
        let y = conv2d(&x, &spec, &[1.0; 9], &[]).unwrap();
        assert_eq!(y.dims(), [1, 1, 1, 1]);
        assert_eq!(y.data(), &[9.0]);
    }

    #[test]
    fn output_size_formula() {
        assert_eq!(conv_output_len(224, 3, 2, 1, 1), Some(112));
        assert_eq!(conv_output_len(7, 3, 1, 4, 4), Some(7));
        assert_eq!(conv_output_len(5, 3, 2, 1, 1), Some(3));
        assert_eq!(conv_output_len(2, 5, 1, 0, 1), None);
    }

    #[test]
    fn rejects_bad_shapes() {
        let x = Tensor4::zeros([1, 2, 4, 4]);
        let spec = ConvSpec::new(3, 4, 3);
        assert!(matches!(
            conv2d(&x, &spec, &vec![0.0; spec.weight_len()], &[0.0; 4]),
            Err(Error::Shape(_))
        ));
        let spec = ConvSpec::new(2, 4, 3);
        assert!(conv2d(&x, &spec, &[0.0; 3], &[0.0; 4]).is_err());
        assert!(ConvSpec::new(3, 4, 3).groups(2).validate().is_err());
        assert!(ConvSpec::new(2, 2, 2).validate().is_err());
    }

    #[test]
    fn rejects_non_finite_input() {
        let mut x = Tensor4::zeros([1, 1, 3, 3]);
        x.set(0, 0, 1, 1, f64::NAN);
        let spec = ConvSpec::new(1, 1, 3);
        assert!(matches!(
            conv2d(&x, &spec, &[0.0; 9], &[0.0]),
            Err(Error::Numeric(_))
        ));
    }
}
