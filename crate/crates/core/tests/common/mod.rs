//! Helpers shared by the integration tests and the acceptance target.
#![allow(dead_code)]

use asdface::features::{AU_COUNT, FEATURE_DIM, FRAME_DIM};
use asdface::model::{
    backward, build_graph_with, forward_trace, init_params, CuHyperparams, CuKind, GraphConfig, ModelGraph, ParamSet,
    StageSpec, Task, TaskMode,
};
use asdface::numerics::{
    activation, activation_backward, add, channel_affine, channel_affine_backward, conv2d, conv2d_backward,
    global_avg_pool, global_avg_pool_backward, linear, linear_backward, Activation, ConvSpec, Tensor4,
};
use asdface::training::{batch_objective, task_loss, ClassWeights, TaskLabels};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

pub const FD_STEP: f64 = 1e-6;
pub const GRAD_TOL: f64 = 1e-4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn rand_tensor(rng: &mut ChaCha8Rng, dims: [usize; 4]) -> Tensor4 {
    let n = dims.iter().product();
    Tensor4::new(dims, uniform_vec(rng, n, -1.0, 1.0)).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relative error with a small absolute floor so that derivatives near zero
/// are judged on absolute precision.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

/// Largest relative error between `analytic` and central differences of `f`
/// at `x`, over every coordinate.
pub fn fd_max_err(f: &dyn Fn(&[f64]) -> f64, x: &[f64], analytic: &[f64]) -> f64 {
    assert_eq!(x.len(), analytic.len());
    let mut worst: f64 = 0.0;
    let mut p = x.to_vec();
    for i in 0..x.len() {
        p[i] = x[i] + FD_STEP;
        let up = f(&p);
        p[i] = x[i] - FD_STEP;
        let down = f(&p);
        p[i] = x[i];
        worst = worst.max(rel_err(analytic[i], (up - down) / (2.0 * FD_STEP)));
    }
    worst
}

fn conv_cases() -> Vec<ConvSpec> {
    vec![
        ConvSpec::new(4, 6, 3),
        ConvSpec::new(4, 6, 3).stride(2).groups(2),
        ConvSpec::new(4, 4, 3).groups(4).dilation(2),
        ConvSpec::new(4, 8, 1).stride(2).bias(false),
        ConvSpec::new(4, 4, 5).padding(1),
    ]
}

/// Max error of every numerics kernel for one seed.
pub fn numerics_errors(seed: u64) -> Vec<(String, f64)> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for (k, spec) in conv_cases().into_iter().enumerate() {
        let x = rand_tensor(&mut r, [2, spec.in_channels, 7, 6]);
        let w = uniform_vec(&mut r, spec.weight_len(), -1.0, 1.0);
        let b = uniform_vec(&mut r, spec.bias_len(), -1.0, 1.0);
        let y = conv2d(&x, &spec, &w, &b).unwrap();
        let u = rand_tensor(&mut r, y.dims());
        let g = conv2d_backward(&x, &spec, &w, &u).unwrap();
        let dims = x.dims();
        let fx = |v: &[f64]| dot(conv2d(&Tensor4::new(dims, v.to_vec()).unwrap(), &spec, &w, &b).unwrap().data(), u.data());
        let fw = |v: &[f64]| dot(conv2d(&x, &spec, v, &b).unwrap().data(), u.data());
        let fb = |v: &[f64]| dot(conv2d(&x, &spec, &w, v).unwrap().data(), u.data());
        let mut e = fd_max_err(&fx, x.data(), g.input.data()).max(fd_max_err(&fw, &w, &g.weights));
        if spec.bias {
            e = e.max(fd_max_err(&fb, &b, &g.bias));
        }
        out.push((format!("conv2d[{k}]"), e));
    }

    let (i, o) = (5, 3);
    let x = uniform_vec(&mut r, i, -1.0, 1.0);
    let w = uniform_vec(&mut r, i * o, -1.0, 1.0);
    let b = uniform_vec(&mut r, o, -1.0, 1.0);
    let u = uniform_vec(&mut r, o, -1.0, 1.0);
    let g = linear_backward(&x, &w, &u).unwrap();
    let e = fd_max_err(&|v| dot(&linear(v, &w, &b).unwrap(), &u), &x, &g.input)
        .max(fd_max_err(&|v| dot(&linear(&x, v, &b).unwrap(), &u), &w, &g.weights))
        .max(fd_max_err(&|v| dot(&linear(&x, &w, v).unwrap(), &u), &b, &g.bias));
    out.push(("linear".into(), e));

    let x = rand_tensor(&mut r, [2, 3, 4, 5]);
    let s = uniform_vec(&mut r, 3, -2.0, 2.0);
    let t = uniform_vec(&mut r, 3, -1.0, 1.0);
    let u = rand_tensor(&mut r, x.dims());
    let g = channel_affine_backward(&x, &s, &u).unwrap();
    let dims = x.dims();
    let e = fd_max_err(
        &|v| dot(channel_affine(&Tensor4::new(dims, v.to_vec()).unwrap(), &s, &t).unwrap().data(), u.data()),
        x.data(),
        g.input.data(),
    )
    .max(fd_max_err(&|v| dot(channel_affine(&x, v, &t).unwrap().data(), u.data()), &s, &g.scale))
    .max(fd_max_err(&|v| dot(channel_affine(&x, &s, v).unwrap().data(), u.data()), &t, &g.shift));
    out.push(("channel_affine".into(), e));

    let a = rand_tensor(&mut r, [2, 3, 4, 4]);
    let bt = rand_tensor(&mut r, [2, 3, 4, 4]);
    let u = rand_tensor(&mut r, a.dims());
    let e = fd_max_err(
        &|v| dot(add(&Tensor4::new(a.dims(), v.to_vec()).unwrap(), &bt).unwrap().data(), u.data()),
        a.data(),
        u.data(),
    );
    out.push(("add".into(), e));

    let x = rand_tensor(&mut r, [2, 3, 5, 4]);
    let u = rand_tensor(&mut r, [2, 3, 1, 1]);
    let g = global_avg_pool_backward(x.dims(), &u).unwrap();
    let e = fd_max_err(
        &|v| dot(global_avg_pool(&Tensor4::new(x.dims(), v.to_vec()).unwrap()).unwrap().data(), u.data()),
        x.data(),
        g.data(),
    );
    out.push(("global_avg_pool".into(), e));

    for kind in [Activation::Relu, Activation::Sigmoid, Activation::Softmax, Activation::Tanh] {
        let mut x = uniform_vec(&mut r, 8, -2.0, 2.0);
        if kind == Activation::Relu {
            // keep away from the kink
            x.iter_mut().for_each(|v| *v += 0.2 * v.signum());
        }
        let u = uniform_vec(&mut r, 8, -1.0, 1.0);
        let g = activation_backward(kind, &x, &u).unwrap();
        let e = fd_max_err(&|v| dot(&activation(kind, v), &u), &x, &g);
        out.push((format!("activation[{kind:?}]"), e));
    }
    out
}

pub fn random_weights(r: &mut ChaCha8Rng) -> ClassWeights {
    ClassWeights {
        expr: uniform_vec(r, 8, 0.2, 3.0),
        au: (0..AU_COUNT).map(|_| [r.random_range(0.2..3.0), r.random_range(0.2..3.0)]).collect(),
    }
}

pub fn random_labels(r: &mut ChaCha8Rng) -> TaskLabels {
    loop {
        let expr = r.random_bool(0.6).then(|| r.random_range(0..8));
        let au = std::array::from_fn(|_| r.random_bool(0.6).then(|| r.random_bool(0.5)));
        let arousal = r.random_bool(0.6).then(|| r.random_range(-1.0..1.0));
        let valence = r.random_bool(0.6).then(|| r.random_range(-1.0..1.0));
        if let Ok(l) = TaskLabels::new(expr, au, arousal, valence) {
            return l;
        }
    }
}

/// Max error of each task loss adjoint for one seed.
pub fn loss_errors(seed: u64) -> Vec<(String, f64)> {
    let mut r = rng(seed);
    let weights = random_weights(&mut r);
    let mut labels = random_labels(&mut r);
    // make every task known so that every adjoint is exercised
    labels.expr.get_or_insert(r.random_range(0..8));
    labels.au[0].get_or_insert(true);
    labels.arousal.get_or_insert(0.3);
    labels.valence.get_or_insert(-0.4);
    Task::ALL
        .iter()
        .map(|&task| {
            let head = uniform_vec(&mut r, task.width(), -2.0, 2.0);
            let (_, g) = task_loss(task, &head, &labels, &weights).unwrap();
            let f = |v: &[f64]| task_loss(task, v, &labels, &weights).unwrap().0;
            (format!("loss[{task}]"), fd_max_err(&f, &head, &g))
        })
        .collect()
}

pub fn small_graph(cu: CuKind) -> ModelGraph {
    build_graph_with(GraphConfig {
        input_channels: 3,
        input_size: (8, 8),
        stem_channels: 4,
        stem_stride: 1,
        stages: vec![
            StageSpec { channels: 8, stride: 2, repeats: 1 },
            StageSpec { channels: 8, stride: 1, repeats: 1 },
        ],
        final_dw_channels: Some(16),
        cu,
        mode: TaskMode::MultiTask,
        hyper: CuHyperparams::default(),
    })
    .unwrap()
}

/// Directional and coordinate checks of the full model objective gradient.
pub fn model_error(cu: CuKind, seed: u64) -> f64 {
    let graph = small_graph(cu);
    let mut r = rng(seed);
    let mut params = init_params(&graph, seed);
    // perturb affine scales and biases away from their initial values
    for v in params.as_mut_slice() {
        *v += r.random_range(-0.05..0.05);
    }
    let batch = rand_tensor(&mut r, [2, 3, 8, 8]);
    let labels: Vec<TaskLabels> = (0..2).map(|_| random_labels(&mut r)).collect();
    let weights = random_weights(&mut r);
    let lambda = 1e-3;
    let objective = |p: &ParamSet| {
        let trace = forward_trace(&graph, p, &batch).unwrap();
        batch_objective(&trace.heads(&graph), &labels, &weights, p, lambda).unwrap()
    };
    let trace = forward_trace(&graph, &params, &batch).unwrap();
    let obj = objective(&params);
    let mut grads = backward(&graph, &params, &trace, &obj.head_adjoints).unwrap();
    for (g, p) in grads.as_mut_slice().iter_mut().zip(params.as_slice()) {
        *g += 2.0 * lambda * p;
    }
    let eval = |v: &[f64]| objective(&ParamSet::from_vec(&graph, v.to_vec()).unwrap()).total();
    let base = params.as_slice().to_vec();

    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        // unit-norm direction keeps every pre-activation change tiny, so the
        // probe does not straddle ReLU kinks
        let mut dir = uniform_vec(&mut r, base.len(), -1.0, 1.0);
        let norm = dot(&dir, &dir).sqrt();
        dir.iter_mut().for_each(|d| *d /= norm);
        let h = FD_STEP;
        let plus: Vec<f64> = base.iter().zip(&dir).map(|(p, d)| p + h * d).collect();
        let minus: Vec<f64> = base.iter().zip(&dir).map(|(p, d)| p - h * d).collect();
        let numeric = (eval(&plus) - eval(&minus)) / (2.0 * h);
        worst = worst.max(rel_err(dot(grads.as_slice(), &dir), numeric));
    }
    let mut p = base.clone();
    for _ in 0..15 {
        let i = r.random_range(0..base.len());
        p[i] = base[i] + FD_STEP;
        let up = eval(&p);
        p[i] = base[i] - FD_STEP;
        let down = eval(&p);
        p[i] = base[i];
        worst = worst.max(rel_err(grads.as_slice()[i], (up - down) / (2.0 * FD_STEP)));
    }
    worst
}

/// Independent recomputation: plain loops, no shared helpers.
pub fn oracle(rows: &[[f64; FRAME_DIM]], tau: f64) -> Vec<f64> {
    let m = rows.len() as f64;
    let mut out = Vec::with_capacity(FEATURE_DIM);
    let mut means = [0.0; FRAME_DIM];
    for j in 0..FRAME_DIM {
        let mut s = 0.0;
        for r in rows {
            s += r[j];
        }
        means[j] = s / m;
    }
    out.extend_from_slice(&means);
    for j in 0..FRAME_DIM {
        let mut s = 0.0;
        for r in rows {
            s += (r[j] - means[j]) * (r[j] - means[j]);
        }
        out.push((s / m).sqrt());
    }
    for j in 0..12 {
        let c = rows.iter().filter(|r| r[j] > tau).count();
        out.push(c as f64 / m);
    }
    out.push(rows.iter().filter(|r| r[20] > 0.0).count() as f64 / m);
    out.push(rows.iter().filter(|r| r[21] > 0.0).count() as f64 / m);
    out
}

pub fn random_frame(r: &mut ChaCha8Rng) -> [f64; FRAME_DIM] {
    let mut v = [0.0; FRAME_DIM];
    for x in v.iter_mut().take(12) {
        // include exact threshold values now and then
        *x = if r.random_bool(0.05) { 0.5 } else { r.random_range(0.0..=1.0) };
    }
    let e: Vec<f64> = (0..8).map(|_| r.random_range(0.0..1.0)).collect();
    let s: f64 = e.iter().sum();
    for k in 0..8 {
        v[12 + k] = e[k] / s;
    }
    v[20] = if r.random_bool(0.05) { 0.0 } else { r.random_range(-1.0..=1.0) };
    v[21] = if r.random_bool(0.05) { 0.0 } else { r.random_range(-1.0..=1.0) };
    v
}

pub fn random_stream(r: &mut ChaCha8Rng) -> Vec<[f64; FRAME_DIM]> {
    let m = match r.random_range(0..10) {
        0 => 1,
        _ => r.random_range(1..200),
    };
    if r.random_bool(0.1) {
        let f = random_frame(r);
        return vec![f; m];
    }
    (0..m).map(|_| random_frame(r)).collect()
}

/// Two-sided p from the statrs Student-t CDF, with t recomputed directly.
pub fn reference_t_test(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let ss = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>()
    };
    let (n1, n2) = (xs.len() as f64, ys.len() as f64);
    let df = n1 + n2 - 2.0;
    let sp2 = (ss(xs) + ss(ys)) / df;
    let t = (mean(xs) - mean(ys)) / (sp2 * (1.0 / n1 + 1.0 / n2)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).unwrap();
    (t, 2.0 * (1.0 - dist.cdf(t.abs())))
}

pub fn random_pair(r: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let n1 = r.random_range(2..40);
    let n2 = r.random_range(2..40);
    let shift = r.random_range(-2.0..2.0);
    let scale = r.random_range(0.1..5.0);
    let xs = (0..n1).map(|_| r.random_range(-1.0..1.0) * scale).collect();
    let ys = (0..n2).map(|_| r.random_range(-1.0..1.0) * scale + shift).collect();
    (xs, ys)
}
