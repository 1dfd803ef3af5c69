//! Finite-difference gradient checks shared by the gradient and acceptance
//! tests. Each case panics on the first mismatch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sentaug::genmodel::{
    loss_cls, loss_sdw, loss_ucr, Classifier, ClassifierGrads, GenTarget, LmGrads, MarkedSentence, TinyLm, Vocabulary,
};
use sentaug::Polarity;

const STEP: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;
pub const SEEDS: u64 = 12;
const SAMPLES_PER_TENSOR: usize = 24;

fn vocab() -> Vocabulary {
    Vocabulary::build([
        "the", "food", "was", "great", "awful", "service", "slow", "but", ".", "we", "left",
    ])
}

fn random_target(vocab: &Vocabulary, rng: &mut ChaCha8Rng) -> GenTarget {
    let words: Vec<usize> = (6..vocab.len()).collect();
    let pick = |rng: &mut ChaCha8Rng, n: usize| -> Vec<usize> {
        (0..n).map(|_| words[rng.gen_range(0..words.len())]).collect()
    };
    let targets = pick(rng, 5);
    let weights = (0..5).map(|_| rng.gen_range(0.05..1.0)).collect();
    let mut negatives = pick(rng, 3);
    negatives.sort_unstable();
    negatives.dedup();
    GenTarget {
        aspect: pick(rng, 1),
        source: pick(rng, 6),
        targets,
        weights,
        negatives,
        bos: vocab.bos(),
    }
}

fn relative_error(a: f64, n: f64) -> f64 {
    let scale = a.abs().max(n.abs());
    if scale < 1e-7 {
        (a - n).abs()
    } else {
        (a - n).abs() / scale
    }
}

/// Samples entries of every tensor, half of them among the entries with a
/// non-zero analytic gradient, and compares against central differences.
fn check<F, P>(name: &str, analytic: &[(&'static str, Vec<f64>)], mut perturb: P, loss: F, rng: &mut ChaCha8Rng)
where
    F: Fn() -> f64,
    P: FnMut(&str, usize, f64),
{
    for (tensor, grad) in analytic {
        let nonzero: Vec<usize> = (0..grad.len()).filter(|&i| grad[i] != 0.0).collect();
        assert!(!nonzero.is_empty(), "{name}: tensor {tensor} has an all-zero gradient");
        for s in 0..SAMPLES_PER_TENSOR {
            let i = if s % 2 == 0 {
                nonzero[rng.gen_range(0..nonzero.len())]
            } else {
                rng.gen_range(0..grad.len())
            };
            perturb(tensor, i, STEP);
            let up = loss();
            perturb(tensor, i, -2.0 * STEP);
            let down = loss();
            perturb(tensor, i, STEP);
            let numeric = (up - down) / (2.0 * STEP);
            let err = relative_error(grad[i], numeric);
            assert!(
                err < TOLERANCE,
                "{name}: {tensor}[{i}] analytic {} numeric {numeric} rel err {err}",
                grad[i]
            );
        }
    }
}

fn lm_snapshot(g: &LmGrads) -> Vec<(&'static str, Vec<f64>)> {
    g.tensors().iter().map(|(n, t)| (*n, t.to_vec())).collect()
}

fn cls_snapshot(g: &ClassifierGrads) -> Vec<(&'static str, Vec<f64>)> {
    g.tensors().iter().map(|(n, t)| (format_cls(n), t.to_vec())).collect()
}

fn format_cls(n: &str) -> &'static str {
    match n {
        "hidden" => "cls.hidden",
        "hidden_bias" => "cls.hidden_bias",
        "output" => "cls.output",
        _ => "cls.output_bias",
    }
}

fn nudge_lm(lm: &mut TinyLm, tensor: &str, i: usize, delta: f64) {
    for (n, t) in lm.tensors_mut() {
        if n == tensor {
            t[i] += delta;
        }
    }
}

fn nudge_cls(c: &mut Classifier, tensor: &str, i: usize, delta: f64) {
    for (n, t) in c.tensors_mut() {
        if format_cls(n) == tensor {
            t[i] += delta;
        }
    }
}

pub fn sdw_case(seed: u64) {
    let vocab = vocab();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lm = TinyLm::new(vocab.clone(), 7, seed);
    let target = random_target(&vocab, &mut rng);
    let mut g = LmGrads::zeros_like(&lm);
    let value = lm.sdw_loss_grad(&target, 1.0, &mut g).unwrap();
    assert!((value - loss_sdw(&lm, &target).unwrap()).abs() < 1e-12);
    let analytic = lm_snapshot(&g);
    let cell = std::cell::RefCell::new(lm);
    check(
        "sdw",
        &analytic,
        |t, i, d| nudge_lm(&mut cell.borrow_mut(), t, i, d),
        || loss_sdw(&*cell.borrow(), &target).unwrap(),
        &mut rng,
    );
}

pub fn ucr_case(seed: u64) {
    let vocab = vocab();
    let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
    let lm = TinyLm::new(vocab.clone(), 6, seed);
    let target = random_target(&vocab, &mut rng);
    let mut g = LmGrads::zeros_like(&lm);
    let value = lm.ucr_loss_grad(&target, 1.0, &mut g).unwrap();
    assert!((value - loss_ucr(&lm, &target).unwrap()).abs() < 1e-12);
    let analytic = lm_snapshot(&g);
    let cell = std::cell::RefCell::new(lm);
    check(
        "ucr",
        &analytic,
        |t, i, d| nudge_lm(&mut cell.borrow_mut(), t, i, d),
        || loss_ucr(&*cell.borrow(), &target).unwrap(),
        &mut rng,
    );
}

pub fn ucr_overlap_case() {
    let vocab = vocab();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lm = TinyLm::new(vocab.clone(), 5, 7);
    let mut target = random_target(&vocab, &mut rng);
    target.negatives = vec![target.targets[0], target.targets[1]];
    target.negatives.sort_unstable();
    target.negatives.dedup();
    let mut g = LmGrads::zeros_like(&lm);
    lm.ucr_loss_grad(&target, 1.0, &mut g).unwrap();
    let analytic = lm_snapshot(&g);
    let cell = std::cell::RefCell::new(lm);
    check(
        "ucr-overlap",
        &analytic,
        |t, i, d| nudge_lm(&mut cell.borrow_mut(), t, i, d),
        || loss_ucr(&*cell.borrow(), &target).unwrap(),
        &mut rng,
    );
}

pub fn cls_case(seed: u64) {
    let vocab = vocab();
    let sentences: [(&[&str], std::ops::Range<usize>); 3] = [
        (&["the", "food", "was", "great"], 1..2),
        (&["we", "left", "but", "the", "service", "was", "slow"], 4..5),
        (&["the", "food", "service", "was", "awful", "."], 1..3),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
    let lm = TinyLm::new(vocab.clone(), 6, seed);
    let cls = Classifier::new(6, 5, seed + 1);
    let (words, span) = sentences[seed as usize % sentences.len()].clone();
    let aug: &[&str] = &["the", "food", "was", "great"];
    let input = MarkedSentence::new(
        &vocab,
        words,
        span,
        if seed.is_multiple_of(2) { Some(aug) } else { None },
    );
    let label = Polarity::from_index(seed as usize % 3).unwrap();
    let mut lg = LmGrads::zeros_like(&lm);
    let mut cg = ClassifierGrads::zeros_like(&cls);
    let value = cls.cls_loss_grad(&lm, &input, label, 1.0, &mut lg, &mut cg);
    assert!((value - loss_cls(&cls, &lm, &input, label)).abs() < 1e-12);
    let mut analytic = lm_snapshot(&lg);
    analytic.truncate(1); // only the embedding of the LM feeds the classifier
    analytic.extend(cls_snapshot(&cg));
    assert!(lg.output.as_slice().iter().all(|&v| v == 0.0));
    let cell = std::cell::RefCell::new((lm, cls));
    check(
        "cls",
        &analytic,
        |t, i, d| {
            let mut pair = cell.borrow_mut();
            if t.starts_with("cls.") {
                nudge_cls(&mut pair.1, t, i, d);
            } else {
                nudge_lm(&mut pair.0, t, i, d);
            }
        },
        || {
            let pair = cell.borrow();
            loss_cls(&pair.1, &pair.0, &input, label)
        },
        &mut rng,
    );
}
