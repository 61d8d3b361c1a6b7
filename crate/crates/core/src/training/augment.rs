use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tensor4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub flip_probability: f64,
    /// Crop side as a fraction of the image side, sampled uniformly.
    pub crop_scale: (f64, f64),
    pub max_rotation_deg: f64,
    pub max_shear_deg: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            flip_probability: 0.5,
            crop_scale: (0.8, 1.0),
            max_rotation_deg: 15.0,
            max_shear_deg: 10.0,
        }
    }
}

/// One concrete draw of the random transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    pub flip: bool,
    pub crop_scale: f64,
    /// Position of the crop window within the free margin, each in `[0, 1]`.
    pub crop_offset: (f64, f64),
    pub rotation_deg: f64,
    pub shear_deg: f64,
}

impl AugmentParams {
    pub fn identity() -> Self {
        Self {
            flip: false,
            crop_scale: 1.0,
            crop_offset: (0.0, 0.0),
            rotation_deg: 0.0,
            shear_deg: 0.0,
        }
    }

    pub fn sample<R: Rng>(rng: &mut R, config: &AugmentConfig) -> Self {
        let (lo, hi) = config.crop_scale;
        let sym = |rng: &mut R, m: f64| if m > 0.0 { rng.random_range(-m..=m) } else { 0.0 };
        Self {
            flip: rng.random::<f64>() < config.flip_probability,
            crop_scale: if hi > lo { rng.random_range(lo..=hi) } else { lo },
            crop_offset: (rng.random(), rng.random()),
            rotation_deg: sym(rng, config.max_rotation_deg),
            shear_deg: sym(rng, config.max_shear_deg),
        }
    }
}

pub fn flip_horizontal(image: &Tensor4) -> Tensor4 {
    let [n, c, h, w] = image.dims();
    Tensor4::from_fn([n, c, h, w], |b, ch, y, x| image.at(b, ch, y, w - 1 - x))
}

fn bilinear(image: &Tensor4, b: usize, c: usize, y: f64, x: f64) -> f64 {
    let (h, w) = (image.height() as isize, image.width() as isize);
    let (y0, x0) = (y.floor(), x.floor());
    let (fy, fx) = (y - y0, x - x0);
    let (y0, x0) = (y0 as isize, x0 as isize);
    let px = |yy: isize, xx: isize| {
        if yy < 0 || xx < 0 || yy >= h || xx >= w {
            0.0
        } else {
            image.at(b, c, yy as usize, xx as usize)
        }
    };
    let mut v = 0.0;
    for (dy, wy) in [(0, 1.0 - fy), (1, fy)] {
        for (dx, wx) in [(0, 1.0 - fx), (1, fx)] {
            let weight = wy * wx;
            if weight != 0.0 {
                v += weight * px(y0 + dy, x0 + dx);
            }
        }
    }
    v
}

/// Applies one fixed transform to every image in the batch: crop and resize,
/// then rotation and shear about the centre, then an optional horizontal
/// flip. Sampling is bilinear; pixels falling outside the source are zero.
pub fn warp(image: &Tensor4, params: &AugmentParams) -> Result<Tensor4> {
    let [n, c, h, w] = image.dims();
    let s = params.crop_scale;
    if !(s > 0.0 && s <= 1.0) || s * (h.min(w) as f64) < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "crop scale {s} does not fit a {h}x{w} image"
        )));
    }
    let (oy, ox) = params.crop_offset;
    if !((0.0..=1.0).contains(&oy) && (0.0..=1.0).contains(&ox)) {
        return Err(Error::InvalidArgument("crop offset outside [0, 1]".into()));
    }
    if !(params.rotation_deg.is_finite() && params.shear_deg.is_finite()) {
        return Err(Error::InvalidArgument("non-finite rotation or shear".into()));
    }
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let y_start = oy * (1.0 - s) * (h as f64 - 1.0);
    let x_start = ox * (1.0 - s) * (w as f64 - 1.0);
    let (sin, cos) = params.rotation_deg.to_radians().sin_cos();
    let shear = params.shear_deg.to_radians().tan();

    let mut data = Vec::with_capacity(image.len());
    let mut coords = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            let xo = if params.flip { (w - 1 - x) as f64 } else { x as f64 };
            let (u, v) = (xo - cx, y as f64 - cy);
            // inverse rotation, then inverse shear
            let (ru, rv) = (cos * u + sin * v, -sin * u + cos * v);
            let (su, sv) = (ru - shear * rv, rv);
            coords.push((y_start + s * (sv + cy), x_start + s * (su + cx)));
        }
    }
    for b in 0..n {
        for ch in 0..c {
            data.extend(coords.iter().map(|&(sy, sx)| bilinear(image, b, ch, sy, sx)));
        }
    }
    Tensor4::new([n, c, h, w], data)
}

/// Random augmentation with the default ranges; each batch item gets its own
/// draw from a generator seeded by `seed`.
pub fn augment(image: &Tensor4, seed: u64) -> Result<Tensor4> {
    augment_with(image, seed, &AugmentConfig::default())
}

pub fn augment_with(image: &Tensor4, seed: u64, config: &AugmentConfig) -> Result<Tensor4> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [n, c, h, w] = image.dims();
    let mut data = Vec::with_capacity(image.len());
    for b in 0..n {
        let single = Tensor4::new([1, c, h, w], image.item(b).to_vec())?;
        let params = AugmentParams::sample(&mut rng, config);
        data.extend(warp(&single, &params)?.into_data());
    }
    Tensor4::new([n, c, h, w], data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> Tensor4 {
        Tensor4::from_fn([2, 3, 9, 7], |n, c, h, w| (n * 100 + c * 30 + h * 7 + w) as f64)
    }

    #[test]
    fn identity_params_reproduce_the_input() {
        let x = ramp();
        assert_eq!(warp(&x, &AugmentParams::identity()).unwrap(), x);
    }

    #[test]
    fn flip_only_matches_mirror() {
        let x = ramp();
        let p = AugmentParams {
            flip: true,
            ..AugmentParams::identity()
        };
        assert_eq!(warp(&x, &p).unwrap(), flip_horizontal(&x));
    }

    #[test]
    fn augmentation_is_deterministic_per_seed() {
        let x = ramp();
        assert_eq!(augment(&x, 3).unwrap(), augment(&x, 3).unwrap());
        assert_ne!(augment(&x, 3).unwrap(), augment(&x, 4).unwrap());
    }

    #[test]
    fn tiny_crop_rejected() {
        let x = Tensor4::zeros([1, 1, 2, 2]);
        let p = AugmentParams {
            crop_scale: 0.3,
            ..AugmentParams::identity()
        };
        assert!(warp(&x, &p).is_err());
    }
}
