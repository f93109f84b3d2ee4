//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use wsn_aco::aco::{select_next_hop, transition_probabilities};
use wsn_aco::energy::{rx_energy, tx_energy};
use wsn_aco::report::{censored, execute};
use wsn_aco::sim::{run_with_state, SimState};
use wsn_aco::topology::{deploy, discover_neighbors, refresh_energy_views};
use wsn_aco::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel_err(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

fn energy_model() -> Outcome {
    let p = EnergyParams::default();
    // 1024*50e-9 = 5.12e-5; 1024*10e-12*400 = 4.096e-6
    let a = tx_energy(1024, 20.0, &p);
    // 1024*50e-9 = 5.12e-5; 1024*0.0013e-12*50^4 = 8.32e-6
    let b = tx_energy(1024, 50.0, &p);
    let c = rx_energy(1, &p);
    let errs = [
        rel_err(a, 5.5296e-5),
        rel_err(b, 5.952e-5),
        rel_err(c, 50e-9),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    outcome(
        worst <= 1e-15,
        format!("tx(20)={a:e} tx(50)={b:e} rx(1)={c:e} max rel err {worst:e}"),
    )
}

/// A node at the center with `k` candidates in range and random energies and
/// pheromone. The sink sits out of range in a corner.
struct Instance {
    net: Network,
    tau: PheromoneTable,
    params: AcoParams,
    allowed: Vec<NodeId>,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let k = rng.random_range(2..=8usize);
    let mut cfg = NetworkConfig::square(200.0, k + 1, 30.0);
    cfg.sink_position = Position::new(200.0, 200.0);
    let mut net = deploy(&cfg, 5.0).unwrap();
    net.nodes[0].position = Position::new(60.0, 60.0);
    for i in 1..=k {
        let r = rng.random_range(0.5..30.0);
        let th = rng.random_range(0.0..std::f64::consts::TAU);
        net.nodes[i].position = Position::new(60.0 + r * th.cos(), 60.0 + r * th.sin());
        net.nodes[i].residual_energy = rng.random_range(0.01..4.99);
    }
    discover_neighbors(&mut net);
    refresh_energy_views(&mut net);
    let mut tau = PheromoneTable::new(1.0);
    for i in 1..=k {
        tau.set(NodeId(0), NodeId(i), rng.random_range(0.05..3.0));
    }
    let params = AcoParams {
        alpha: rng.random_range(0.0..4.0),
        beta: rng.random_range(0.0..4.0),
        gamma: rng.random_range(0.0..3.0),
        energy_heuristic: if rng.random_bool(0.5) {
            EnergyHeuristic::Residual
        } else {
            EnergyHeuristic::AsWrittenDifference
        },
        ..AcoParams::default()
    };
    let allowed = (1..=k).map(NodeId).collect();
    Instance {
        net,
        tau,
        params,
        allowed,
    }
}

/// Direct product-and-normalize evaluation.
fn brute_force(inst: &Instance) -> Vec<f64> {
    let p = &inst.params;
    let me = inst.net.nodes[0].position;
    let weights: Vec<f64> = inst
        .allowed
        .iter()
        .map(|&j| {
            let n = &inst.net.nodes[j.0];
            let d = ((me.x - n.position.x).powi(2) + (me.y - n.position.y).powi(2)).sqrt();
            let delta = match p.energy_heuristic {
                EnergyHeuristic::Residual => n.residual_energy,
                EnergyHeuristic::AsWrittenDifference => 5.0 - n.residual_energy,
            };
            inst.tau.get(NodeId(0), j).powf(p.alpha) * (1.0 / d).powf(p.beta) * delta.powf(p.gamma)
        })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_dev: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    let cases = 2000;
    for _ in 0..cases {
        let inst = random_instance(&mut rng);
        let dist =
            transition_probabilities(NodeId(0), &inst.allowed, &inst.net, &inst.tau, &inst.params)
                .unwrap();
        let want = brute_force(&inst);
        for (j, w) in inst.allowed.iter().zip(&want) {
            worst_dev = worst_dev.max((dist.probability(*j) - w).abs());
        }
        let sum: f64 = inst.allowed.iter().map(|&j| dist.probability(j)).sum();
        worst_sum = worst_sum.max((sum - 1.0).abs());
    }
    outcome(
        worst_dev <= 1e-12 && worst_sum <= 1e-9,
        format!("{cases} instances, max |dev| {worst_dev:e}, max |sum-1| {worst_sum:e}"),
    )
}

fn sampling() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut draw_rng = ChaCha8Rng::seed_from_u64(100);
    let draws = 100_000usize;
    let mut failures = 0;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..20 {
        let inst = random_instance(&mut rng);
        let dist =
            transition_probabilities(NodeId(0), &inst.allowed, &inst.net, &inst.tau, &inst.params)
                .unwrap();
        let mut counts = vec![0usize; inst.allowed.len()];
        for _ in 0..draws {
            let pick = select_next_hop(&dist, &mut draw_rng);
            counts[pick.0 - 1] += 1;
        }
        // cells with expected count below 5 are pooled
        let mut bins: Vec<(f64, f64)> = Vec::new();
        let mut pooled = (0.0, 0.0);
        for (i, &j) in inst.allowed.iter().enumerate() {
            let expected = dist.probability(j) * draws as f64;
            if expected < 5.0 {
                pooled.0 += expected;
                pooled.1 += counts[i] as f64;
            } else {
                bins.push((expected, counts[i] as f64));
            }
        }
        if pooled.0 > 0.0 {
            bins.push(pooled);
        }
        if bins.len() < 2 {
            continue;
        }
        let stat: f64 = bins.iter().map(|(e, o)| (o - e).powi(2) / e).sum();
        let critical = ChiSquared::new((bins.len() - 1) as f64)
            .unwrap()
            .inverse_cdf(0.999);
        worst_ratio = worst_ratio.max(stat / critical);
        if stat > critical {
            failures += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures == 0 && elapsed < Duration::from_secs(10),
        format!(
            "20 fixtures x {draws} draws, {failures} rejected, max stat/critical {worst_ratio:.3}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn pheromone_dynamics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut evap_dev: f64 = 0.0;
    let mut scale_dev: f64 = 0.0;
    for _ in 0..500 {
        let mut table = PheromoneTable::new(1.0);
        for e in 0..rng.random_range(1..40usize) {
            table.set(NodeId(e), NodeId(e + 1), rng.random_range(0.0..10.0));
        }
        let rho = rng.random_range(0.0..=1.0);
        let mut twice = table.clone();
        twice.evaporate(rho);
        twice.evaporate(rho);
        let mut once = table.clone();
        once.evaporate(1.0 - (1.0 - rho) * (1.0 - rho));
        for (edge, v) in twice.iter() {
            evap_dev = evap_dev.max((v - once.get(edge.0, edge.1)).abs());
        }

        let inst = random_instance(&mut rng);
        let c = rng.random_range(1e-3..1e3);
        let mut scaled = inst.tau.clone();
        for &j in &inst.allowed {
            scaled.set(NodeId(0), j, inst.tau.get(NodeId(0), j) * c);
        }
        let a =
            transition_probabilities(NodeId(0), &inst.allowed, &inst.net, &inst.tau, &inst.params)
                .unwrap();
        let b =
            transition_probabilities(NodeId(0), &inst.allowed, &inst.net, &scaled, &inst.params)
                .unwrap();
        for &j in &inst.allowed {
            scale_dev = scale_dev.max((a.probability(j) - b.probability(j)).abs());
        }
    }

    // three overlapping paths; 0->1 is shared by all of them
    let paths: [(&[usize], f64); 3] = [
        (&[0, 1, 2, 9], 30.0),
        (&[0, 1, 3, 9], 45.0),
        (&[0, 1, 2, 4, 9], 60.0),
    ];
    let mut table = PheromoneTable::new(0.5);
    for (path, len) in paths {
        let ids: Vec<NodeId> = path.iter().copied().map(NodeId).collect();
        table.deposit(&ids, len, 1.0);
    }
    let expected = [
        ((0, 1), 0.5 + 1.0 / 30.0 + 1.0 / 45.0 + 1.0 / 60.0),
        ((1, 2), 0.5 + 1.0 / 30.0 + 1.0 / 60.0),
        ((2, 9), 0.5 + 1.0 / 30.0),
        ((1, 3), 0.5 + 1.0 / 45.0),
        ((3, 9), 0.5 + 1.0 / 45.0),
        ((2, 4), 0.5 + 1.0 / 60.0),
        ((4, 9), 0.5 + 1.0 / 60.0),
        ((9, 0), 0.5),
    ];
    let deposit_dev = expected
        .iter()
        .map(|&((a, b), want)| (table.get(NodeId(a), NodeId(b)) - want).abs())
        .fold(0.0, f64::max);

    let worst = evap_dev.max(scale_dev).max(deposit_dev);
    outcome(
        worst <= 1e-12,
        format!(
            "evaporation {evap_dev:e}, scale invariance {scale_dev:e}, deposit {deposit_dev:e}"
        ),
    )
}

fn ledger_conservation() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    let mut parts = Vec::new();
    for scenario in [1u8, 2, 3] {
        let cfg = SimConfig::for_scenario(NetworkConfig::preset(scenario).unwrap());
        let mut state = SimState::new(&cfg).unwrap();
        let result = run_with_state(&mut state, &cfg).unwrap();
        let drained: f64 = state
            .network
            .sensors()
            .filter(|n| !n.is_super)
            .map(|n| cfg.energy.initial_energy - n.residual_energy)
            .sum();
        let err = rel_err(drained, state.ledger.total());
        worst = worst.max(err);
        monotone &= result
            .rounds
            .windows(2)
            .all(|w| w[1].alive_nodes <= w[0].alive_nodes);
        parts.push(format!("s{scenario} {:.4} J", state.ledger.total()));
    }
    outcome(
        worst <= 1e-9 && monotone,
        format!(
            "{}, max rel err {worst:e}, alive monotone {monotone}",
            parts.join(", ")
        ),
    )
}

fn scenario2_spec(protocols: Vec<ProtocolKind>) -> ExperimentSpec {
    let mut spec = ExperimentSpec::for_preset(2).unwrap();
    spec.protocols = protocols;
    spec.seeds = (1..=5).collect();
    spec
}

fn directional() -> Outcome {
    let start = Instant::now();
    let spec = scenario2_spec(vec![
        ProtocolKind::ModifiedAco,
        ProtocolKind::ClassicAco,
        ProtocolKind::RandomWalk,
    ]);
    let records = execute(&spec).unwrap();
    let elapsed = start.elapsed();
    let mean = |kind: ProtocolKind, f: &dyn Fn(&SimResult) -> f64| {
        let xs: Vec<f64> = records
            .iter()
            .filter(|r| r.protocol == kind)
            .map(|r| f(&r.result))
            .collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    };
    let success = |r: &SimResult| r.success_ratio;
    let fnd = |r: &SimResult| censored(r.fnd_round, spec.base.rounds);
    let (m, c, w) = (
        mean(ProtocolKind::ModifiedAco, &success),
        mean(ProtocolKind::ClassicAco, &success),
        mean(ProtocolKind::RandomWalk, &success),
    );
    let (mf, cf) = (
        mean(ProtocolKind::ModifiedAco, &fnd),
        mean(ProtocolKind::ClassicAco, &fnd),
    );
    let a = m > w;
    let b = m >= c;
    let cc = mf >= cf;
    let fast = elapsed < Duration::from_secs(300);
    outcome(
        a && b && cc && fast,
        format!(
            "(a) {} modified {m:.4} > random-walk {w:.4}; (b) {} modified {m:.4} >= classic {c:.4}; \
             (c) {} fnd {mf:.1} >= {cf:.1} (no death = {}); 15 runs {:.1}s",
            pf(a),
            pf(b),
            pf(cc),
            spec.base.rounds + 1,
            elapsed.as_secs_f64()
        ),
    )
}

fn ttl_sweep_sanity() -> Outcome {
    let mut spec = scenario2_spec(vec![ProtocolKind::ModifiedAco]);
    spec.sweep = Sweep::Ttl(vec![5, 10, 15, 20]);
    let records = execute(&spec).unwrap();
    let means: Vec<(u32, f64)> = [5u32, 10, 15, 20]
        .iter()
        .map(|&t| {
            let xs: Vec<f64> = records
                .iter()
                .filter(|r| r.config.ttl == t)
                .map(|r| r.result.success_ratio)
                .collect();
            (t, xs.iter().sum::<f64>() / xs.len() as f64)
        })
        .collect();
    let ok = means.windows(2).all(|w| w[1].1 >= w[0].1);
    let shown: Vec<String> = means
        .iter()
        .map(|(t, m)| format!("ttl {t}: {m:.4}"))
        .collect();
    outcome(ok, shown.join(", "))
}

fn csv_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    out.insert(
        "summary.csv".into(),
        fs::read(dir.join("summary.csv")).unwrap(),
    );
    for entry in fs::read_dir(dir.join("runs")).unwrap() {
        let p = entry.unwrap().path();
        out.insert(
            p.file_name().unwrap().to_string_lossy().into_owned(),
            fs::read(&p).unwrap(),
        );
    }
    out
}

fn determinism() -> Outcome {
    let mut spec = ExperimentSpec::for_preset(1).unwrap();
    spec.protocols = ProtocolKind::ALL.to_vec();
    spec.seeds = vec![11];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    spec.out_dir = a.path().to_path_buf();
    run_experiments(&spec).unwrap();
    spec.out_dir = b.path().to_path_buf();
    run_experiments(&spec).unwrap();
    let (fa, fb) = (csv_bytes(a.path()), csv_bytes(b.path()));
    let same = fa == fb && fa.len() == ProtocolKind::ALL.len() + 1;
    outcome(
        same,
        format!("{} files compared, identical {same}", fa.len()),
    )
}

fn scale_check() -> Outcome {
    let cfg = SimConfig::for_scenario(NetworkConfig::scenario3());
    let start = Instant::now();
    let r = run_simulation(&cfg).unwrap();
    let elapsed = start.elapsed();
    outcome(
        elapsed < Duration::from_secs(60) && r.rounds.len() == 1000,
        format!("{} rounds in {:.2}s", r.rounds.len(), elapsed.as_secs_f64()),
    )
}

fn pf(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check); 9] = [
        ("energy model values", energy_model),
        ("transition oracle equivalence", oracle_equivalence),
        ("roulette sampling chi-square", sampling),
        ("pheromone dynamics", pheromone_dynamics),
        ("ledger conservation", ledger_conservation),
        ("directional comparison, scenario 2", directional),
        ("ttl sweep monotone", ttl_sweep_sanity),
        ("determinism", determinism),
        ("scenario 3 runtime", scale_check),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} {} {name}: {}", pf(o.pass), i + 1, o.detail);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
