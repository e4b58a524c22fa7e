//! Independent reference implementations used by the integration and
//! acceptance tests. None of them shares code with the library routine it
//! checks.
#![allow(dead_code)]

use milseq::decoder::EventInterval;
use milseq::tensor::gradcheck::{numeric_gradient, relative_error, STEP};
use milseq::tensor::{DenseArray, Primitive, Tape};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// CTC negative log-likelihood by enumerating all `K^T` frame paths.
pub fn ctc_nll_by_enumeration(log_probs: &DenseArray<f64>, labels: &[usize], blank: usize) -> f64 {
    let (t, k) = (log_probs.rows(), log_probs.cols());
    let mut matching = Vec::new();
    let mut path = vec![0usize; t];
    loop {
        let mut collapsed: Vec<usize> = Vec::new();
        let mut prev = None;
        for &s in &path {
            if Some(s) != prev && s != blank {
                collapsed.push(s);
            }
            prev = Some(s);
        }
        if collapsed == labels {
            matching.push(path.iter().enumerate().map(|(i, &s)| log_probs.get(i, s)).sum::<f64>());
        }
        // Next path in base-k counting order.
        let mut i = 0;
        loop {
            if i == t {
                return -log_sum_exp(&matching);
            }
            path[i] += 1;
            if path[i] < k {
                break;
            }
            path[i] = 0;
            i += 1;
        }
    }
}

/// Minimal edit cost by exploring every alignment path (no memoization).
pub fn edit_cost_by_enumeration(r: &[usize], h: &[usize]) -> usize {
    match (r.split_first(), h.split_first()) {
        (None, _) => h.len(),
        (_, None) => r.len(),
        (Some((a, rr)), Some((b, hh))) => {
            let diag = edit_cost_by_enumeration(rr, hh) + usize::from(a != b);
            let del = edit_cost_by_enumeration(rr, h) + 1;
            let ins = edit_cost_by_enumeration(r, hh) + 1;
            diag.min(del).min(ins)
        }
    }
}

/// Segment ER and F1 (percent) recounted on a 0.1-second grid. Intervals
/// are given in tenths of a second.
pub fn segment_metrics_by_recount(
    hyp: &[(usize, u32, u32)],
    reference: &[(usize, u32, u32)],
    duration_tenths: u32,
    classes: usize,
) -> (f64, f64) {
    let segments = duration_tenths.div_ceil(10);
    let active = |set: &[(usize, u32, u32)], c: usize, s: u32| {
        let cells: std::collections::BTreeSet<u32> = (s * 10..s * 10 + 10).collect();
        set.iter()
            .filter(|e| e.0 == c)
            .any(|e| (e.1..e.2).any(|cell| cells.contains(&cell)))
    };
    let (mut tp, mut fp, mut fn_, mut n, mut s_, mut d_, mut i_) = (0i64, 0i64, 0i64, 0i64, 0i64, 0i64, 0i64);
    for s in 0..segments {
        let (mut stp, mut sfp, mut sfn) = (0i64, 0i64, 0i64);
        for c in 0..classes {
            let (h, r) = (active(hyp, c, s), active(reference, c, s));
            n += i64::from(r);
            stp += i64::from(h && r);
            sfp += i64::from(h && !r);
            sfn += i64::from(!h && r);
        }
        tp += stp;
        fp += sfp;
        fn_ += sfn;
        s_ += sfn.min(sfp);
        d_ += (sfn - sfp).max(0);
        i_ += (sfp - sfn).max(0);
    }
    let er = if n == 0 {
        if s_ + d_ + i_ == 0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        100.0 * (s_ + d_ + i_) as f64 / n as f64
    };
    let denom = 2 * tp + fp + fn_;
    let f1 = if denom == 0 { 0.0 } else { 100.0 * (2 * tp) as f64 / denom as f64 };
    (er, f1)
}

pub fn to_intervals(spans: &[(usize, u32, u32)]) -> Vec<EventInterval> {
    spans
        .iter()
        .map(|&(c, a, b)| EventInterval::new(c, a as f64 / 10.0, b as f64 / 10.0).unwrap())
        .collect()
}

/// Micro F1 (percent) of thresholded scores, straight from the definition.
pub fn micro_f1_direct(scores: &[Vec<f64>], labels: &[Vec<bool>], thresholds: &[f64]) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (row, lab) in scores.iter().zip(labels) {
        for c in 0..row.len() {
            let p = row[c] >= thresholds[c];
            match (p, lab[c]) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
    }
    if 2 * tp + fp + fn_ == 0 {
        0.0
    } else {
        100.0 * (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
    }
}

pub fn random_array(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> DenseArray<f64> {
    let data = (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect();
    DenseArray::matrix(rows, cols, data).unwrap()
}

/// Distinct nonzero values at least `2 * gap` apart in shuffled order, so
/// neither max selections nor relu branches flip under a finite-difference
/// step.
pub fn spread_array(rng: &mut ChaCha8Rng, rows: usize, cols: usize, gap: f64) -> DenseArray<f64> {
    let n = rows * cols;
    let mut vals: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * gap * 2.0 - n as f64 * gap).collect();
    for i in (1..n).rev() {
        vals.swap(i, rng.gen_range(0..=i));
    }
    DenseArray::matrix(rows, cols, vals).unwrap()
}

/// Relative error between the tape gradient and central differences for
/// `sum(weights * primitive(inputs))`, worst over all inputs.
pub fn primitive_gradient_error(primitive: &Primitive, inputs: &[DenseArray<f64>], seed: u64) -> f64 {
    let eval = |args: &[DenseArray<f64>]| -> (f64, Option<Vec<DenseArray<f64>>>) {
        let tape = Tape::new();
        let vars: Vec<_> = args
            .iter()
            .enumerate()
            .map(|(i, a)| tape.param(format!("x{}", i), a.clone()))
            .collect();
        let out = tape.apply(primitive.clone(), &vars).unwrap();
        let mut r = rng(seed);
        let w = random_array(&mut r, 1, out.value().len(), -1.0, 1.0);
        let w = DenseArray::new(out.shape(), w.into_data()).unwrap();
        let loss = out.mul(tape.constant(w)).unwrap().sum().unwrap();
        let value = loss.value().item().unwrap();
        let grads = tape.backward(loss).unwrap();
        (value, Some((0..args.len()).map(|i| grads.get(&format!("x{}", i)).unwrap().clone()).collect()))
    };
    let (_, analytic) = eval(inputs);
    let analytic = analytic.unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..inputs.len() {
        let numeric = numeric_gradient(&inputs[i], STEP, |x| {
            let mut args = inputs.to_vec();
            args[i] = x.clone();
            Ok(eval(&args).0)
        })
        .unwrap();
        worst = worst.max(relative_error(analytic[i].data(), numeric.data()));
    }
    worst
}

/// Distinct probabilities in `[0.05, 0.95]`, at least `0.6 / n` apart.
pub fn distinct_probs(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseArray<f64> {
    let n = rows * cols;
    let step = 0.9 / n as f64;
    let mut vals: Vec<f64> = (0..n)
        .map(|i| 0.05 + step * (i as f64 + 0.5) + rng.gen_range(-0.2..0.2) * step)
        .collect();
    for i in (1..n).rev() {
        vals.swap(i, rng.gen_range(0..=i));
    }
    DenseArray::matrix(rows, cols, vals).unwrap()
}

pub type InputGen = fn(&mut ChaCha8Rng) -> Vec<DenseArray<f64>>;

/// Every tape primitive with an input generator that stays clear of its
/// kinks and clamps.
pub fn primitive_cases() -> Vec<(&'static str, Primitive, InputGen)> {
    fn two(r: &mut ChaCha8Rng) -> Vec<DenseArray<f64>> {
        vec![random_array(r, 3, 2, -2.0, 2.0), random_array(r, 3, 2, -2.0, 2.0)]
    }
    fn one(r: &mut ChaCha8Rng) -> Vec<DenseArray<f64>> {
        vec![random_array(r, 4, 3, -3.0, 3.0)]
    }
    fn spread(r: &mut ChaCha8Rng) -> Vec<DenseArray<f64>> {
        vec![spread_array(r, 4, 3, 0.05)]
    }
    vec![
        ("matmul", Primitive::MatMul, |r| vec![random_array(r, 3, 4, -1.0, 1.0), random_array(r, 4, 2, -1.0, 1.0)]),
        ("affine", Primitive::Affine, |r| {
            vec![random_array(r, 3, 4, -1.0, 1.0), random_array(r, 4, 2, -1.0, 1.0), random_array(r, 1, 2, -1.0, 1.0)]
        }),
        ("add", Primitive::Add, two),
        ("sub", Primitive::Sub, two),
        ("mul", Primitive::Mul, two),
        ("scale", Primitive::Scale(-1.7), one),
        ("sigmoid", Primitive::Sigmoid, one),
        ("tanh", Primitive::Tanh, one),
        ("relu", Primitive::Relu, spread),
        ("softmax", Primitive::Softmax, one),
        ("log_softmax", Primitive::LogSoftmax, one),
        ("log", Primitive::Log { floor: Primitive::LOG_FLOOR }, |r| vec![random_array(r, 3, 3, 0.1, 2.0)]),
        ("log1m", Primitive::Log1m { floor: Primitive::LOG_FLOOR }, |r| vec![random_array(r, 3, 3, -0.5, 0.9)]),
        ("log1m_exp", Primitive::Log1mExp { floor: Primitive::LOG_FLOOR }, |r| {
            vec![random_array(r, 3, 3, -3.0, -0.05)]
        }),
        ("sum", Primitive::Sum, one),
        ("sum_rows", Primitive::SumRows, one),
        ("max_rows", Primitive::MaxRows, spread),
        ("concat_rows", Primitive::ConcatRows, |r| vec![random_array(r, 2, 3, -1.0, 1.0), random_array(r, 3, 3, -1.0, 1.0)]),
        ("concat_cols", Primitive::ConcatCols, |r| vec![random_array(r, 3, 1, -1.0, 1.0), random_array(r, 3, 2, -1.0, 1.0)]),
        ("slice_rows", Primitive::SliceRows { start: 1, end: 3 }, one),
        ("slice_cols", Primitive::SliceCols { start: 1, end: 3 }, one),
        ("unfold_odd", Primitive::Unfold { width: 3 }, one),
        ("unfold_even", Primitive::Unfold { width: 2 }, one),
        ("max_pool_rows", Primitive::MaxPoolRows { factor: 2 }, spread),
        ("ctc_nll", Primitive::CtcNll { labels: vec![0, 1, 1], blank: 2 }, |r| vec![random_array(r, 6, 3, -3.0, -0.1)]),
    ]
}

/// Worst relative error of [`pool_max_grad`] and [`pool_noisy_or_grad`]
/// against central differences of the pooled value.
pub fn pooling_gradient_error(seed: u64) -> f64 {
    use milseq::objectives::{pool_max, pool_max_grad, pool_noisy_or, pool_noisy_or_grad};
    let mut r = rng(seed);
    let x = distinct_probs(&mut r, 1, 8);
    let numeric = |f: fn(&[f64]) -> milseq::Result<milseq::objectives::BagValue<f64>>| {
        numeric_gradient(&x, STEP, |v| Ok(f(v.data())?.value)).unwrap()
    };
    let e_max = relative_error(&pool_max_grad(x.data()).unwrap(), numeric(pool_max).data());
    let e_nor = relative_error(&pool_noisy_or_grad(x.data()).unwrap(), numeric(pool_noisy_or).data());
    e_max.max(e_nor)
}

/// Worst relative error of the recorded bag cross-entropy gradient, for both
/// poolings and every averaging convention, against central differences of
/// the direct (tape-free) loss.
pub fn bag_bce_gradient_error(seed: u64) -> f64 {
    use milseq::objectives::{bag_bce, pool, weak_loss, AveragingConvention, Pooling, WeakLabel};
    let mut r = rng(seed);
    let (frames, classes) = (5, 3);
    let probs = distinct_probs(&mut r, frames, classes);
    let present: Vec<usize> = (0..classes).filter(|_| r.gen_bool(0.5)).collect();
    let label = WeakLabel::new(present, classes).unwrap();
    let mut worst: f64 = 0.0;
    for pooling in [Pooling::Max, Pooling::NoisyOr] {
        for conv in [
            AveragingConvention::Frames,
            AveragingConvention::UtterancesAndClasses,
            AveragingConvention::FramesAndClasses,
        ] {
            let tape = Tape::new();
            let p = tape.param("p", probs.clone());
            let loss = weak_loss(p, &label, pooling, conv).unwrap().loss;
            let analytic = tape.backward(loss).unwrap().get("p").unwrap().clone();
            let numeric = numeric_gradient(&probs, STEP, |x| {
                Ok(bag_bce(&pool(pooling, x)?, &label, pooling, conv, frames)?.loss)
            })
            .unwrap();
            worst = worst.max(relative_error(analytic.data(), numeric.data()));
        }
    }
    worst
}

/// Tiny conv + BiGRU model used for end-to-end gradient checks.
pub fn tiny_model_config(kind: milseq::objectives::ObjectiveKind) -> milseq::seqnets::ModelConfig {
    use milseq::seqnets::{ConvLayer, Head, ModelConfig};
    ModelConfig {
        input_dim: 3,
        conv: vec![ConvLayer { width: 2, channels: 3, pool: 2 }],
        recurrent: vec![3],
        head: if kind == milseq::objectives::ObjectiveKind::Ctc { Head::Softmax } else { Head::Sigmoid },
        classes: 2,
        dropout: 0.0,
    }
}

/// Smallest distance of the conv layer's relu inputs from zero, and of each
/// max-pooled pair from a tie, recomputed by hand from the parameters.
fn conv_margin(params: &milseq::Params, x: &DenseArray<f64>) -> f64 {
    let (w, b) = (params.get("conv0.w").unwrap(), params.get("conv0.b").unwrap());
    let (t_len, f) = (x.rows(), x.cols());
    let ch = b.cols();
    let mut act = vec![vec![0.0; ch]; t_len];
    let mut margin = f64::INFINITY;
    for t in 0..t_len {
        for c in 0..ch {
            let mut z = b.get(0, c);
            for k in 0..2 {
                if t + k < t_len {
                    for j in 0..f {
                        z += x.get(t + k, j) * w.get(k * f + j, c);
                    }
                }
            }
            margin = margin.min(z.abs());
            act[t][c] = z.max(0.0);
        }
    }
    for pair in act.chunks(2) {
        for c in 0..ch {
            if pair[0][c] > 0.0 || pair[1][c] > 0.0 {
                margin = margin.min((pair[0][c] - pair[1][c]).abs());
            }
        }
    }
    margin
}

/// Worst parameter-gradient relative error of the tiny model under
/// `kind`, or `None` when the drawn case sits too close to a kink.
pub fn tiny_model_gradient_error(kind: milseq::objectives::ObjectiveKind, seed: u64) -> Option<f64> {
    use milseq::objectives::{ObjectiveKind, ObjectiveSpec, Target, WeakLabel};
    use milseq::seqnets::{Dropout, Model};
    use milseq::tensor::gradcheck::{max_relative_error, numeric_param_gradients};
    let mut r = rng(seed);
    let model: Model<f64> = Model::init(tiny_model_config(kind), seed).unwrap();
    let mut params = model.params.clone();
    for (name, p) in params.iter_mut() {
        if name.ends_with(".b") {
            *p = random_array(&mut r, 1, p.cols(), -0.5, 0.5);
        }
    }
    let x = random_array(&mut r, 8, 3, -1.5, 1.5);
    if conv_margin(&params, &x) < 1e-2 {
        return None;
    }
    let label = WeakLabel::new([0], 2).unwrap();
    let seq = [1usize, 0];
    let target = match kind {
        ObjectiveKind::Ctc => Target::Sequence(&seq),
        _ => Target::Weak(&label),
    };
    let objective = ObjectiveSpec::new(kind);
    let config = model.config.clone();
    let loss_of = |p: &milseq::Params, grad: bool| -> milseq::Result<(f64, Option<milseq::tensor::Gradients<f64>>)> {
        let m = Model::from_params(config.clone(), p.clone())?;
        let tape = Tape::new();
        let bound = tape.bind(p);
        let logits = m.logits(&tape, &bound, &x, Dropout::Off)?;
        let loss = objective.recorded_loss(logits, target)?.loss;
        let v = loss.value().item()?;
        Ok((v, if grad { Some(tape.backward(loss)?) } else { None }))
    };
    let analytic = loss_of(&params, true).unwrap().1.unwrap();
    let numeric = numeric_param_gradients(&params, STEP, |p| Ok(loss_of(p, false)?.0)).unwrap();
    Some(max_relative_error(&analytic, &numeric))
}

/// One random CTC instance: `(|nll - enumerated|, forward-backward gradient
/// error, tape gradient error through log-softmax)`.
pub fn ctc_case(seed: u64) -> (f64, f64, f64) {
    use milseq::objectives::ctc::{ctc_loss, forward_backward, min_frames};
    let mut r = rng(seed);
    let classes = r.gen_range(1..=3);
    let len = r.gen_range(0..=3);
    let labels: Vec<usize> = (0..len).map(|_| r.gen_range(0..classes)).collect();
    let frames = r.gen_range(min_frames(&labels).max(1)..=6);
    let blank = classes;
    let logits = random_array(&mut r, frames, classes + 1, -2.0, 2.0);
    let log_probs = {
        let tape = Tape::new();
        tape.constant(logits.clone()).log_softmax().unwrap().value()
    };
    let fb = forward_backward(&log_probs, &labels, blank).unwrap();
    let value_err = (fb.nll - ctc_nll_by_enumeration(&log_probs, &labels, blank)).abs();
    let numeric = numeric_gradient(&log_probs, STEP, |lp| ctc_loss(lp, &labels, blank)).unwrap();
    let fb_err = relative_error(fb.grad.data(), numeric.data());

    let tape = Tape::new();
    let z = tape.param("z", logits.clone());
    let nll = z.log_softmax().unwrap().ctc_nll(labels.clone(), blank).unwrap();
    let analytic = tape.backward(nll).unwrap().get("z").unwrap().clone();
    let numeric = numeric_gradient(&logits, STEP, |z| {
        let t = Tape::new();
        t.constant(z.clone()).log_softmax()?.ctc_nll(labels.clone(), blank)?.value().item()
    })
    .unwrap();
    (value_err, fb_err, relative_error(analytic.data(), numeric.data()))
}

/// Random token pair with lengths up to 6 over a small alphabet.
pub fn random_pair(seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut r = rng(seed);
    let alphabet = r.gen_range(1..=4);
    let draw = |r: &mut ChaCha8Rng| {
        let n = r.gen_range(0..=6);
        (0..n).map(|_| r.gen_range(0..alphabet)).collect::<Vec<_>>()
    };
    let a = draw(&mut r);
    let b = draw(&mut r);
    (a, b)
}

/// Checks the library edit distance on one pair against the enumerated
/// minimum, and that its operation split describes a real alignment.
pub fn edit_case(seed: u64) -> Result<(), String> {
    use milseq::decoder::TokenSequence;
    use milseq::evaluation::edit_distance;
    let (r, h) = random_pair(seed);
    let e = edit_distance(&TokenSequence(r.clone()), &TokenSequence(h.clone()));
    let want = edit_cost_by_enumeration(&r, &h);
    if e.total() != want {
        return Err(format!("{:?} vs {:?}: got {} want {}", r, h, e.total(), want));
    }
    let matched = r.len() - e.substitutions - e.deletions;
    if e.substitutions + e.deletions > r.len() || matched + e.substitutions + e.insertions != h.len() {
        return Err(format!("{:?} vs {:?}: unrealizable split {:?}", r, h, e));
    }
    Ok(())
}

/// Random intervals on a 0.1 s grid inside `[0, duration)`.
pub fn random_spans(r: &mut ChaCha8Rng, classes: usize, duration: u32, count: usize) -> Vec<(usize, u32, u32)> {
    (0..count)
        .map(|_| {
            let a = r.gen_range(0..duration);
            let b = r.gen_range(a + 1..=duration);
            (r.gen_range(0..classes), a, b)
        })
        .collect()
}

/// Compares library segment ER/F1 with the grid recount on one random case.
pub fn segment_case(seed: u64) -> Result<(), String> {
    use milseq::evaluation::segment_metrics;
    let mut r = rng(seed);
    let classes = r.gen_range(1..=4);
    let duration = r.gen_range(3..=60);
    let nh = r.gen_range(0..=6);
    let nr = r.gen_range(0..=6);
    let hyp = random_spans(&mut r, classes, duration, nh);
    let reference = random_spans(&mut r, classes, duration, nr);
    let got = segment_metrics(
        &to_intervals(&hyp),
        &to_intervals(&reference),
        duration as f64 / 10.0,
        1.0,
        classes,
    )
    .map_err(|e| e.to_string())?;
    let want = segment_metrics_by_recount(&hyp, &reference, duration, classes);
    let close = |a: f64, b: f64| a == b || (a - b).abs() < 1e-9;
    if close(got.0, want.0) && close(got.1, want.1) {
        Ok(())
    } else {
        Err(format!("seed {}: got {:?} want {:?}", seed, got, want))
    }
}

/// Random tagging-style score set with ties and at least one positive.
pub fn random_score_set(seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<bool>>) {
    let mut r = rng(seed);
    let classes = r.gen_range(1..=5);
    let items = r.gen_range(4..=30);
    let coarse = r.gen_bool(0.5);
    let mut labels: Vec<Vec<bool>> = (0..items).map(|_| (0..classes).map(|_| r.gen_bool(0.3)).collect()).collect();
    labels[0][0] = true;
    let scores = labels
        .iter()
        .map(|row| {
            row.iter()
                .map(|&l| {
                    let s = (r.gen_range(0.0f64..1.0) + if l { 0.3 } else { 0.0 }).min(1.0);
                    if coarse {
                        (s * 10.0).round() / 10.0
                    } else {
                        s
                    }
                })
                .collect()
        })
        .collect();
    (scores, labels)
}

/// Best micro F1 over every pair of candidate thresholds.
pub fn exhaustive_two_class(scores: &[Vec<f64>], labels: &[Vec<bool>]) -> f64 {
    use milseq::evaluation::candidate_thresholds;
    let col = |c: usize| candidate_thresholds(&scores.iter().map(|r| r[c]).collect::<Vec<_>>());
    let mut best: f64 = 0.0;
    for &a in &col(0) {
        for &b in &col(1) {
            best = best.max(micro_f1_direct(scores, labels, &[a, b]));
        }
    }
    best
}

/// Hand-built two-class score sets. In the first, the per-class optimum of
/// class 0 is not the micro optimum, so the second phase has work to do.
pub fn constructed_two_class_cases() -> Vec<(Vec<Vec<f64>>, Vec<Vec<bool>>)> {
    let mut cases = Vec::new();

    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (s, l) in [(0.9, true), (0.8, false), (0.7, false), (0.6, false), (0.5, true)] {
        scores.push(vec![s, 0.0]);
        labels.push(vec![l, false]);
    }
    for _ in 0..2 {
        scores.push(vec![0.0, 0.9]);
        labels.push(vec![false, true]);
    }
    for _ in 0..10 {
        scores.push(vec![0.0, 0.2]);
        labels.push(vec![false, true]);
    }
    for _ in 0..30 {
        scores.push(vec![0.0, 0.5]);
        labels.push(vec![false, false]);
    }
    cases.push((scores, labels));

    // Both classes separable.
    cases.push((
        vec![vec![0.9, 0.1], vec![0.2, 0.8], vec![0.7, 0.6], vec![0.1, 0.3]],
        vec![vec![true, false], vec![false, true], vec![true, true], vec![false, false]],
    ));

    // Overlapping score ranges in both classes.
    cases.push((
        vec![
            vec![0.9, 0.4],
            vec![0.6, 0.7],
            vec![0.55, 0.65],
            vec![0.4, 0.2],
            vec![0.35, 0.9],
            vec![0.3, 0.3],
            vec![0.1, 0.6],
        ],
        vec![
            vec![true, false],
            vec![false, true],
            vec![true, false],
            vec![false, false],
            vec![true, true],
            vec![false, true],
            vec![true, false],
        ],
    ));

    // One class with a single positive buried among negatives.
    cases.push((
        vec![vec![0.8, 0.7], vec![0.3, 0.75], vec![0.6, 0.72], vec![0.2, 0.71], vec![0.9, 0.1]],
        vec![vec![true, false], vec![false, false], vec![true, true], vec![false, false], vec![true, false]],
    ));
    cases
}
