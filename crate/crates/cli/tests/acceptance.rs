//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs end to end through `run_experiment` where a command exists, so the
//! CSV tables checked here are the ones a user would get. Exits non-zero if
//! any criterion deviates from its recorded expectation.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use lab_cli::{run_experiment, ExperimentConfig, STATUS_OK};
use lab_core::action::{apply_word, c0_dist_to_id, eval_point, GridSpec};
use lab_core::certify::{check_pingpong, Interval};
use lab_core::diffeo::presets::{self, PP_F_KNOTS, PP_I, PP_J};
use lab_core::diffeo::{GeneratorMap, GeneratorSet};
use lab_core::numeric::rel_err;
use lab_core::par;
use lab_core::words::{enumerate_positive, enumerate_sphere, positive_word, Letter, Word};
use lab_core::zassenhaus::{build_wreath_pair, pigeonhole_bound};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const FLATTEN_EPS: [f64; 3] = [0.5, 0.2, 0.1];
const FLATTEN_TIME: Duration = Duration::from_secs(60);

const WREATH: &str = "[wreath]\nepsilon = 0.1\ncore = 0.40 0.41\nk = 3\n";

struct Verdict {
    id: u8,
    title: &'static str,
    pass: bool,
    note: String,
}

type Kv = HashMap<String, String>;

struct Run {
    status: i32,
    wall: Duration,
    detail: Kv,
    summary: Vec<Kv>,
    digest: String,
}

fn read_rows(path: &Path) -> Vec<Kv> {
    let mut r = csv::Reader::from_path(path).expect("readable csv");
    let header = r.headers().expect("header").clone();
    r.records()
        .map(|rec| {
            let rec = rec.expect("record");
            header.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect()
        })
        .collect()
}

fn run(command: &str, text: &str, out: &Path, threads: usize) -> Run {
    let cfg = ExperimentConfig::from_text(command, text, Some(out.to_path_buf()), Some(threads)).expect("config");
    let r = run_experiment(&cfg);
    assert_eq!(r.paths.len(), 2, "{command} wrote no tables: {}", r.summary);
    let mut hasher = Sha256::new();
    for p in &r.paths {
        hasher.update(fs::read(p).expect("table"));
    }
    let detail = read_rows(&r.paths[1]).into_iter().map(|row| (row["key"].clone(), row["value"].clone())).collect();
    Run {
        status: r.status,
        wall: r.wall_time,
        detail,
        summary: read_rows(&r.paths[0]),
        digest: format!("{:x}", hasher.finalize()),
    }
}

fn num(kv: &Kv, key: &str) -> f64 {
    kv.get(key).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN)
}

fn flatten_config(eps: f64) -> String {
    format!("[generators]\npreset = pp\n[params]\nepsilon = {eps}\n[caps]\nn_max = 22\ntime_budget = 60\n")
}

fn transport_config() -> String {
    format!(
        "[generators]\npreset = wreath\n{WREATH}[params]\nx0 = 0.405\ndelta_len = 0.05\nepsilon = 0.1\nlambda = 1.1\n[caps]\nn_max = 12\n"
    )
}

fn collision_config() -> String {
    "[generators]\npreset = wreath\n[wreath]\nepsilon = 0.09\ncore = 0.40 0.41\nk = 3\n\
     [params]\nx0 = 0.5\nlambda = 1.1\nc = 0.5\nepsilon = 0.09\n[caps]\nn_max = 14\n"
        .to_string()
}

fn wreath_config() -> String {
    format!("{WREATH}[params]\nprobe_radius = 6\nprobe_grid = 1000\n")
}

fn random_reduced(rng: &mut ChaCha8Rng, max_len: usize) -> Word {
    let len = rng.gen_range(1..=max_len);
    let mut letters: Vec<Letter> = Vec::with_capacity(len);
    while letters.len() < len {
        let l = Letter::from_index(rng.gen_range(0..4));
        if letters.last() != Some(&l.inverse()) {
            letters.push(l);
        }
    }
    Word::reduce(letters)
}

fn random_positive(rng: &mut ChaCha8Rng, max_len: usize) -> Word {
    let k = rng.gen_range(1..=max_len);
    positive_word(k, rng.gen_range(0..(1u64 << k)))
}

/// Fourth-order central difference (Richardson on two step sizes). The
/// small step keeps the stencil from straddling a bump's support edge.
fn derivative_oracle(w: &Word, x: f64, set: &GeneratorSet) -> f64 {
    let d = |h: f64| (eval_point(w, x + h, set).unwrap() - eval_point(w, x - h, set).unwrap()) / (2.0 * h);
    let h = 1e-6;
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

fn criterion_1_2_10(runs: &[Run]) -> Vec<Verdict> {
    let mut notes1 = Vec::new();
    let mut pass1 = true;
    let mut notes2 = Vec::new();
    let mut pass2 = true;
    let mut shows_both = true;
    for (eps, r) in FLATTEN_EPS.iter().zip(runs) {
        let d = &r.detail;
        let cert = num(d, "accepted_certified_bound");
        let oracle = num(d, "oracle_max");
        let n = num(d, "accepted_n");
        let v_len = num(d, "accepted_v_len");
        let best: Vec<f64> = r.summary.iter().map(|row| num(row, "best_cert")).collect();
        let monotone = best.windows(2).all(|w| w[1] <= w[0]);
        let ok = r.status == STATUS_OK
            && v_len >= 1.0
            && cert < 2.0 * eps
            && oracle < 2.0 * eps
            && n <= 22.0
            && monotone
            && r.wall <= FLATTEN_TIME;
        pass1 &= ok;
        notes1.push(format!(
            "eps={eps}: status {} n={n} |V|={v_len} cert={cert:.3e} oracle={oracle:.3e} {:.1}s",
            r.status,
            r.wall.as_secs_f64()
        ));

        let candidates = r.summary.last().map_or(f64::NAN, |row| num(row, "candidates"));
        let checked = num(d, "basepoint_checked");
        let ok2 = num(d, "basepoint_violations") == 0.0
            && num(d, "suffix_violations") == 0.0
            && checked == candidates
            && num(d, "suffix_checked") == candidates
            && num(d, "pullback_below_y1") == 0.0
            && num(d, "zone_violations") == 0.0;
        pass2 &= ok2;
        notes2.push(format!("eps={eps}: {checked} traces, 0 violations: {ok2}"));
        shows_both &= d.contains_key("theoretical_n") && d.contains_key("empirical_n");
    }
    let bound = pigeonhole_bound(2.0, 3, 1.01, 5, 0.1);
    let gaps: Vec<String> =
        runs.iter().map(|r| format!("{} vs {}", r.detail["theoretical_n"], r.detail["empirical_n"])).collect();
    vec![
        Verdict { id: 1, title: "flattening on pp", pass: pass1, note: notes1.join("; ") },
        Verdict { id: 2, title: "base-point and suffix invariants", pass: pass2, note: notes2.join("; ") },
        Verdict {
            id: 10,
            title: "pigeonhole bound",
            pass: matches!(bound, Ok(156)) && shows_both,
            note: format!("bound {bound:?}; theoretical vs empirical n: {}", gaps.join(", ")),
        },
    ]
}

fn criterion_3() -> Verdict {
    let mixed =
        GeneratorSet::new(vec![GeneratorMap::mobius("f", 1.5).unwrap(), GeneratorMap::polybump("g", 1.0).unwrap()])
            .unwrap();
    let wreath = build_wreath_pair(0.1, Interval::new(0.40, 0.41).unwrap(), 3).unwrap().set;
    // pp is only C1 and its long words have derivatives near 1e-10, below
    // what a difference quotient resolves; it takes part in the product check.
    let sets = [mixed, wreath, presets::pp()];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cases: Vec<(usize, Word, f64)> =
        (0..10_000).map(|i| (i % sets.len(), random_reduced(&mut rng, 12), rng.gen_range(0.01..0.99))).collect();
    let errs = par::map_slice(&cases, |(s, w, x)| {
        let set = &sets[*s];
        let t = apply_word(w, *x, set).unwrap();
        let naive: f64 = t.letter_derivs.iter().product();
        let fd = if *s < 2 { rel_err(t.chain_product, derivative_oracle(w, *x, set)) } else { 0.0 };
        (fd, rel_err(t.chain_product, naive))
    });
    let fd = errs.iter().map(|e| e.0).fold(0.0, f64::max);
    let prod = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    Verdict {
        id: 3,
        title: "chain rule",
        pass: fd <= 1e-6 && prod <= 1e-12,
        note: format!(
            "10000 cases; vs FD (mobius+polybump, wreath) max rel err {fd:.2e}; vs letter product (also pp) {prod:.2e}"
        ),
    }
}

fn criterion_4() -> Verdict {
    let set = presets::pp();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let words: Vec<Word> = (0..100).map(|_| random_reduced(&mut rng, 12)).collect();
    let grid = GridSpec::new(1000).unwrap();
    let oracle = GridSpec::new(100_000).unwrap();
    let mut violations = 0;
    let mut worst_slack = f64::INFINITY;
    for w in &words {
        let est = c0_dist_to_id(w, grid, &set).unwrap();
        let dense = par::map_range(oracle.n() + 1, |i| {
            let x = oracle.point(i);
            (eval_point(w, x, &set).unwrap() - x).abs()
        })
        .into_iter()
        .fold(0.0, f64::max);
        if dense > est.certified_bound || est.certified_bound - est.grid_max > grid.step() * (1.0 + 1e-12) {
            violations += 1;
        }
        worst_slack = worst_slack.min(est.certified_bound - dense);
    }
    Verdict {
        id: 4,
        title: "certified C0 bound soundness",
        pass: violations == 0,
        note: format!("100 words, N=1000, 1e5-point oracle: {violations} violations, min slack {worst_slack:.2e}"),
    }
}

fn criterion_5() -> Verdict {
    let positive: Vec<bool> =
        (1..=20usize).map(|k| enumerate_positive(k).count() as u64 == (1u64 << (k + 1)) - 2).collect();
    let spheres: Vec<bool> =
        (1..=10usize).map(|n| enumerate_sphere(2, n).count() as u64 == 4 * 3u64.pow(n as u32 - 1)).collect();
    let pass = positive.iter().all(|&b| b) && spheres.iter().all(|&b| b);
    Verdict {
        id: 5,
        title: "word counting",
        pass,
        note: "positive words k <= 20 and rank-2 spheres n <= 10 enumerated and compared exactly".into(),
    }
}

/// Returns the verdict and whether the perturbation sub-check is the only
/// failing part.
fn criterion_6() -> (Verdict, bool) {
    let set = presets::pp();
    let i = Interval::new(PP_I.0, PP_I.1).unwrap();
    let j = Interval::new(PP_J.0, PP_J.1).unwrap();
    let cert = check_pingpong(set.generator(0), set.generator(1), i, j).unwrap();
    let reference = cert.valid && cert.min_margin() >= 1e-3;

    let mut knots = PP_F_KNOTS;
    knots[2] = (0.9, 0.360);
    let bent = GeneratorMap::spline("f", &knots, 1.0, 1.0).unwrap();
    let bent_cert = check_pingpong(&bent, set.generator(1), i, j).unwrap();
    let bent_f_max = bent.eval_value(j.hi).unwrap();
    let perturbation_fails = !bent_cert.valid;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let probe: Vec<f64> = (0..=200)
        .map(|k| i.lo + i.len() * k as f64 / 200.0)
        .chain((0..=200).map(|k| j.lo + j.len() * k as f64 / 200.0))
        .collect();
    let mut pairs = Vec::with_capacity(1000);
    while pairs.len() < 1000 {
        let a = random_positive(&mut rng, 8);
        let b = random_positive(&mut rng, 8);
        if a != b {
            pairs.push((a, b));
        }
    }
    let seps = par::map_slice(&pairs, |(a, b)| {
        probe
            .iter()
            .map(|&x| (eval_point(a, x, &set).unwrap() - eval_point(b, x, &set).unwrap()).abs())
            .fold(0.0, f64::max)
    });
    let min_sep = seps.iter().copied().fold(f64::INFINITY, f64::min);
    let separated = min_sep >= 1e-9;

    let pass = reference && perturbation_fails && separated;
    let only_perturbation = reference && separated && !perturbation_fails;
    let note = format!(
        "pp valid with margin {:.3e}: {reference}; perturbed (0.9, 0.360) rejected: {perturbation_fails} \
         (perturbed f(0.75) = {bent_f_max:.4} <= 0.35, so f(I u J) stays inside I and the certificate is valid; \
         the expected rejection does not hold for this knot); 1000 positive pairs min separation {min_sep:.2e}",
        cert.min_margin()
    );
    (Verdict { id: 6, title: "ping-pong certifier", pass, note }, only_perturbation)
}

fn criterion_7(r: &Run) -> Verdict {
    let d = &r.detail;
    let v = num(d, "v_deriv_x0");
    let c = num(d, "c");
    let pass = r.status == STATUS_OK
        && num(d, "pair_n") <= 14.0
        && v > 1.0 - c
        && v < 1.0 + c
        && d.get("chain_audit_passed").map(String::as_str) == Some("true");
    Verdict {
        id: 7,
        title: "derivative collision on the wreath pair",
        pass,
        note: format!(
            "n={} V={} V'(x0)={v:.6} audit passed: {} ({})",
            d.get("pair_n").map_or("-", String::as_str),
            d.get("v").map_or("-", String::as_str),
            d.get("chain_audit_passed").map_or("-", String::as_str),
            d.get("distinctness").map_or("-", String::as_str)
        ),
    }
}

fn criterion_8(r: &Run) -> Verdict {
    let d = &r.detail;
    let levels = r.summary.len();
    let transitions: f64 = r.summary.iter().map(|row| num(row, "transitions")).sum();
    let violations: f64 = r.summary.iter().map(|row| num(row, "violations")).sum();
    let sharp: f64 = r.summary.iter().map(|row| num(row, "sharp_violations")).sum();
    let pass = r.status == STATUS_OK
        && levels == 12
        && violations == 0.0
        && d.get("pullback_in_delta").map(String::as_str) == Some("true")
        && d.get("distinctness").map(String::as_str) == Some("normal_form");
    Verdict {
        id: 8,
        title: "interval transport on the wreath pair",
        pass,
        note: format!(
            "n <= {levels}: {transitions} transitions, {violations} violations ({sharp} of the sharp MVT form); \
             overlap g1={} g2={} certified by {}",
            d.get("g1").map_or("-", String::as_str),
            d.get("g2").map_or("-", String::as_str),
            d.get("distinctness").map_or("-", String::as_str)
        ),
    }
}

fn criterion_9(r: &Run) -> Verdict {
    let d = &r.detail;
    let du = num(d, "d1_u_certified");
    let dv = num(d, "d1_v_certified");
    let comm = num(d, "commutator_max");
    let floor = num(d, "grid_probe_floor");
    let pass = r.status == STATUS_OK
        && du < 0.1
        && dv < 0.1
        && d.get("translates_disjoint").map(String::as_str) == Some("true")
        && comm <= 1e-12
        && floor > 0.0
        && num(d, "probe_radius") == 6.0
        && d.get("evidence").is_some_and(|e| e.contains("evidence"));
    Verdict {
        id: 9,
        title: "Z wr Z pair near the identity",
        pass,
        note: format!(
            "d1(u) <= {du:.4}, d1(v) <= {dv:.4}, commutators {comm:.1e}, deriv-gap floor {floor:.4e} over n <= 6 \
             (evidence, not proof); single-point minimum {}",
            d.get("single_point_min").map_or("-", String::as_str)
        ),
    }
}

fn criterion_11(one: &[&Run], eight: &[&Run]) -> Verdict {
    let same = one.iter().zip(eight).filter(|(a, b)| a.digest == b.digest).count();
    Verdict {
        id: 11,
        title: "determinism across thread counts",
        pass: same == one.len(),
        note: format!("{same}/{} scenarios byte-identical at 1 and 8 threads (SHA-256 of both tables)", one.len()),
    }
}

fn out_dir(root: &Path, name: &str, threads: usize) -> PathBuf {
    root.join(format!("{name}_t{threads}"))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let root = tmp.path();

    let mut flatten_runs = Vec::new();
    for threads in [1, 8] {
        for eps in FLATTEN_EPS {
            let dir = out_dir(root, &format!("flatten_{eps}"), threads);
            flatten_runs.push(run("flatten", &flatten_config(eps), &dir, threads));
        }
    }
    let (flat1, flat8) = flatten_runs.split_at(FLATTEN_EPS.len());
    let collision: Vec<Run> =
        [1, 8].iter().map(|&t| run("collision", &collision_config(), &out_dir(root, "collision", t), t)).collect();
    let transport: Vec<Run> =
        [1, 8].iter().map(|&t| run("transport", &transport_config(), &out_dir(root, "transport", t), t)).collect();
    let wreath = run("wreath", &wreath_config(), &out_dir(root, "wreath", 8), 8);

    let mut verdicts = criterion_1_2_10(flat8);
    verdicts.push(criterion_3());
    verdicts.push(criterion_4());
    verdicts.push(criterion_5());
    let (v6, only_perturbation) = criterion_6();
    verdicts.push(v6);
    verdicts.push(criterion_7(&collision[1]));
    verdicts.push(criterion_8(&transport[1]));
    verdicts.push(criterion_9(&wreath));
    let one: Vec<&Run> = flat1.iter().chain([&collision[0], &transport[0]]).collect();
    let eight: Vec<&Run> = flat8.iter().chain([&collision[1], &transport[1]]).collect();
    verdicts.push(criterion_11(&one, &eight));
    verdicts.sort_by_key(|v| v.id);

    let mut unexpected = Vec::new();
    for v in &verdicts {
        println!("criterion {:>2} {}: {} | {}", v.id, if v.pass { "PASS" } else { "FAIL" }, v.title, v.note);
        // Criterion 6 is expected to fail on its perturbation sub-check only
        // (the perturbed knot lies outside I u J); everything else must pass.
        let expected = v.pass || (v.id == 6 && only_perturbation);
        if !expected {
            unexpected.push(v.id);
        }
    }
    let passed = verdicts.iter().filter(|v| v.pass).count();
    println!("acceptance: {passed}/{} PASS", verdicts.len());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
