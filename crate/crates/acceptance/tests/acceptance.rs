//! One line per acceptance criterion; exits nonzero if any criterion fails.

use std::time::Instant;

use num_complex::Complex64;
use qewsim::classical::{classical_distribution, classical_limit_distance, ClassicalCoupling, DEFAULT_TAIL_TOL};
use qewsim::evolution::{dense_oracle, scatter, InteractionMode, JointAmplitude, Label, ScatterOptions};
use qewsim::runner::{simulate, sweep_rows, ScenarioConfig, SweepRow};
use qewsim::smatrix::{
    element_single_electron, element_two_electron, CouplingSet, SeriesControl, TransitionLabel, TwoElectronKernel,
};
use qewsim::states::make_fock;
use qewsim::stats::{marginalize, pcc, post_select, to_distribution};
use qewsim::Result;
use qewsim_acceptance::{figure, run_all, Verdict};

const GRID_G: [f64; 3] = [0.5, 1.0, 2.0];
const GRID_N: u32 = 5;
const GRID_GAIN: i32 = 8;

/// Total-variation distance at `n̄ = 256`, `|G|√n̄ = 1`, frozen from the first run.
const CLASSICAL_TV_256: f64 = 4.215184e-3;
/// Simultaneous PCC at `n̄ = 5`, `G = 1` for Fock, coherent and thermal input.
const FAMILY_PCC: [(&str, f64); 3] = [
    ("fock", 0.0434782609),
    ("coherent", 0.0434782609),
    ("thermal", 0.0434782610),
];

fn pcc_value(cfg: &ScenarioConfig) -> Result<f64> {
    let sim = simulate(cfg)?;
    Ok(sim.pcc("e1", "e2")?.value.unwrap_or(f64::NAN))
}

fn fig1d() -> Result<Verdict> {
    let cfg = figure("fig1d")?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("thread pool");
    let t = Instant::now();
    let r = pool.install(|| pcc_value(&cfg))?;
    let secs = t.elapsed().as_secs_f64();
    let mut v = Verdict::default();
    v.check(
        (r.abs() - 0.67).abs() <= 0.02,
        format!("|PCC| = {:.6} (0.67 ± 0.02)", r.abs()),
    );
    v.check(secs < 10.0, format!("single-threaded {secs:.2}s < 10s"));
    Ok(v)
}

fn fig1b() -> Result<Verdict> {
    let sim = simulate(&figure("fig1b")?)?;
    let succ = sim.pcc("e1", "e2")?.value.unwrap_or(f64::NAN);
    let simul = pcc_value(&figure("fig1d")?)?;
    let e1 = marginalize(&sim.joint, &["e1"])?;
    let gain: f64 = e1.iter().filter(|(k, _)| k[0] > 0).map(|(_, p)| p).sum();
    let ratio = simul.abs() / succ.abs().max(1e-16);
    let mut v = Verdict::default();
    v.check(succ.abs() <= 1e-10, format!("|PCC| = {:.2e} <= 1e-10", succ.abs()));
    v.check(gain == 0.0, format!("P(e1 > 0) = {:e}", gain.abs()));
    v.check(ratio >= 1e13, format!("ratio {ratio:.2e} >= 1e13"));
    Ok(v)
}

fn fig1ef() -> Result<Verdict> {
    let cfg = figure("fig1e")?;
    let quantum = pcc_value(&cfg)?;
    let field = ClassicalCoupling::from_quantum(&cfg.couplings()?, cfg.photon.n_avg())?;
    let scale = field.as_slice()[0].norm();
    let classical = pcc(&classical_distribution(&field, DEFAULT_TAIL_TOL)?, "e1", "e2")?
        .value
        .unwrap_or(f64::NAN);
    let mut v = Verdict::default();
    v.check(
        quantum.abs() > 0.05,
        format!("quantum |PCC| = {:.5} > 0.05", quantum.abs()),
    );
    v.check((scale - 4.5).abs() < 1e-12, format!("|𝒢| = {scale}"));
    v.check(
        classical.abs() <= 1e-12,
        format!("classical |PCC| = {:.1e} <= 1e-12", classical.abs()),
    );
    Ok(v)
}

fn grid_couplings() -> Vec<CouplingSet> {
    let mut out = Vec::new();
    for g1 in GRID_G {
        for g2 in GRID_G {
            out.push(CouplingSet::real(&[g1, g2]).expect("finite couplings"));
        }
    }
    out
}

fn oracle_equivalence() -> Result<Verdict> {
    let t = Instant::now();
    let ctl = SeriesControl::default();
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for c in grid_couplings() {
        let kernel = TwoElectronKernel::new(&c, &ctl)?;
        let w = GRID_GAIN + 16 + (4.0 * c.magnitude_sum()).ceil() as i32;
        let n_max = GRID_N + 24 + (8.0 * c.strength()).ceil() as u32;
        let oracle = dense_oracle(&c, n_max, (-w, w), InteractionMode::Simultaneous)?;
        for n_i in 0..=GRID_N {
            let mut start = JointAmplitude::new(2, n_max, (-w, w))?;
            start.insert(Label::photons(n_i), Complex64::new(1.0, 0.0));
            let out = oracle.propagate(&start)?;
            for dj in -GRID_GAIN..=GRID_GAIN {
                for dk in -GRID_GAIN..=GRID_GAIN {
                    let Some(t) = TransitionLabel::from_gains(n_i, dj, dk) else {
                        continue;
                    };
                    let p = kernel.element(&t)?.norm_sqr();
                    let q = out.get(&Label::new(t.n_f, &[dj, dk])).norm_sqr();
                    worst = worst.max((p - q).abs());
                    compared += 1;
                }
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let mut v = Verdict::default();
    v.check(
        worst <= 1e-8,
        format!("{compared} elements, max deviation {worst:.2e} <= 1e-8"),
    );
    v.check(secs < 60.0, format!("{secs:.1}s < 60s"));
    Ok(v)
}

fn unitarity() -> Result<Verdict> {
    let mut worst: f64 = 0.0;
    let mut columns = 0;
    for c in grid_couplings() {
        let kernel = TwoElectronKernel::new(&c, &SeriesControl::default())?;
        for n_i in 0..=GRID_N {
            let col = kernel.column(n_i, n_i + 120, (-80, 80), 1e-300)?;
            let total: f64 = col.entries.iter().map(|(_, a)| a.norm_sqr()).sum();
            worst = worst.max((total - 1.0).abs());
            columns += 1;
        }
    }
    let mut v = Verdict::default();
    v.check(
        worst <= 1e-8,
        format!("{columns} columns, max |Σ|S|² - 1| = {worst:.2e} <= 1e-8"),
    );
    Ok(v)
}

fn energy_conservation() -> Result<Verdict> {
    let mut v = Verdict::default();
    let n_i = 3;
    for electrons in 1..=4 {
        let c = CouplingSet::uniform(Complex64::from_polar(0.8, 0.3), electrons)?;
        let start = JointAmplitude::from_photon(&make_fock(n_i), electrons, n_i, (0, 0))?;
        let mut labels = 0;
        let mut violations = 0;
        for mode in [InteractionMode::Simultaneous, InteractionMode::Successive] {
            let out = scatter(&start, &c, &ScatterOptions::new(mode))?;
            let d = to_distribution(&out);
            for (k, p) in d.iter() {
                labels += 1;
                if *p > 0.0 && k.iter().map(|&x| x as i64).sum::<i64>() != n_i as i64 {
                    violations += 1;
                }
            }
        }
        v.check(
            violations == 0,
            format!("N={electrons}: {violations} of {labels} entries violate"),
        );
    }
    let kernel = TwoElectronKernel::new(&CouplingSet::real(&[1.0, 2.0])?, &SeriesControl::default())?;
    let col = kernel.column(n_i, n_i + 60, (-40, 40), 1e-300)?;
    let bad = col.entries.iter().filter(|(t, _)| !t.conserves_energy()).count();
    v.check(
        bad == 0,
        format!("kernel: {bad} of {} entries violate", col.entries.len()),
    );
    Ok(v)
}

fn single_electron_reduction() -> Result<Verdict> {
    let ctl = SeriesControl::default();
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for g in GRID_G {
        let c = CouplingSet::real(&[g, 0.0])?;
        for n_i in 0..=GRID_N {
            for dj in -GRID_GAIN..=GRID_GAIN {
                for dk in -GRID_GAIN..=GRID_GAIN {
                    let Some(t) = TransitionLabel::from_gains(n_i, dj, dk) else {
                        continue;
                    };
                    let two = element_two_electron(&c, &t, &ctl)?;
                    let one = if dk == 0 {
                        element_single_electron(Complex64::new(g, 0.0), n_i, t.n_f, &ctl)?
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    worst = worst.max((two - one).norm());
                    compared += 1;
                }
            }
        }
    }
    let mut v = Verdict::default();
    v.check(
        worst <= 1e-10,
        format!("{compared} elements, max |ΔS| = {worst:.2e} <= 1e-10"),
    );
    Ok(v)
}

fn classical_limit() -> Result<Verdict> {
    let mut distances = Vec::new();
    for n_avg in [4.0_f64, 16.0, 64.0, 256.0] {
        let g = 1.0 / n_avg.sqrt();
        let cfg = ScenarioConfig::from_toml_str(&format!(
            "name = \"limit\"\nphoton = {{ kind = \"coherent\", n_avg = {n_avg:?} }}\n\
             electrons = [{{ magnitude = {g:?} }}, {{ magnitude = {g:?} }}]\n"
        ))?;
        let sim = simulate(&cfg)?;
        let field = ClassicalCoupling::from_quantum(&cfg.couplings()?, n_avg)?;
        distances.push(classical_limit_distance(&sim.joint, &field)?);
    }
    let last = distances[3];
    let mut v = Verdict::default();
    v.check(
        distances.windows(2).all(|w| w[1] < w[0]),
        format!(
            "TV {:.4e} > {:.4e} > {:.4e} > {:.4e}",
            distances[0], distances[1], distances[2], last
        ),
    );
    v.check(
        ((last - CLASSICAL_TV_256) / CLASSICAL_TV_256).abs() < 1e-6,
        format!("n̄=256 TV {last:.7e} matches baseline {CLASSICAL_TV_256:e}"),
    );
    Ok(v)
}

fn find(rows: &[SweepRow], mode: InteractionMode, g: f64, n: f64) -> Option<f64> {
    rows.iter()
        .find(|r| r.mode == mode && r.g == g && r.n == n)
        .and_then(|r| r.pcc)
}

fn fig2_trends() -> Result<Verdict> {
    let rows = sweep_rows(&figure("fig2")?)?;
    let mut v = Verdict::default();
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    v.check(failed == 0, format!("{} points, {failed} failed", rows.len()));

    let sim = InteractionMode::Simultaneous;
    let strong = find(&rows, sim, 2.0, 0.0).unwrap_or(f64::NAN).abs();
    let weak = find(&rows, sim, 0.5, 20.0).unwrap_or(f64::NAN).abs();
    v.check(
        strong > weak,
        format!("|PCC|(2, 0) = {strong:.4} > |PCC|(0.5, 20) = {weak:.2e}"),
    );

    let simultaneous: Vec<f64> = rows.iter().filter(|r| r.mode == sim).filter_map(|r| r.pcc).collect();
    let negative = simultaneous.iter().filter(|p| **p < 0.0).count();
    v.check(
        negative == simultaneous.len(),
        format!("{negative} of {} simultaneous PCC values negative", simultaneous.len()),
    );

    // Corner with the most photons per |G|²; "small" means 1% of the map's largest |PCC|.
    let scale = simultaneous.iter().fold(0.0_f64, |m, p| m.max(p.abs()));
    let succ = find(&rows, InteractionMode::Successive, 0.5, 20.0).unwrap_or(f64::NAN);
    let gap = (succ - find(&rows, sim, 0.5, 20.0).unwrap_or(f64::NAN)).abs();
    v.check(
        gap <= 0.01 * scale,
        format!("corner |ΔPCC| = {gap:.2e} <= {:.2e}", 0.01 * scale),
    );
    Ok(v)
}

fn post_selection_symmetry() -> Result<Verdict> {
    let mut base = figure("s4")?;
    base.post_select.clear();
    let joint = simulate(&base)?.joint;
    let conditioned =
        |a: i32, b: i32| -> Result<_> { marginalize(&post_select(&joint, &[("e3", a), ("e4", b)])?, &["e1", "e2"]) };
    let mut swap: f64 = 0.0;
    let mut mirror: f64 = 0.0;
    for a in -1..=1 {
        for b in -1..=1 {
            let x = conditioned(a, b)?;
            let y = conditioned(b, a)?;
            for (k, p) in x.iter() {
                swap = swap.max((p - y.get(k)).abs());
                mirror = mirror.max((p - x.get(&[k[1], k[0]])).abs());
            }
            for (k, p) in y.iter() {
                swap = swap.max((p - x.get(k)).abs());
            }
        }
    }
    let mut v = Verdict::default();
    v.check(
        swap <= 1e-12,
        format!("(k3, k4) swap max deviation {swap:.1e} <= 1e-12"),
    );
    v.check(
        mirror <= 1e-12,
        format!("e1 <-> e2 max deviation {mirror:.1e} <= 1e-12"),
    );
    Ok(v)
}

fn state_families() -> Result<Verdict> {
    let mut v = Verdict::default();
    for (family, baseline) in FAMILY_PCC {
        let simul = pcc_value(&figure(&format!("s5_{family}_simultaneous"))?)?;
        let succ = pcc_value(&figure(&format!("s5_{family}_successive"))?)?;
        v.check(
            simul.abs() >= 10.0 * succ.abs(),
            format!("{family}: |PCC| {:.4e} vs successive {:.1e}", simul.abs(), succ.abs()),
        );
        v.check(
            (simul - baseline).abs() <= 1e-9,
            format!("{family}: matches baseline {baseline}"),
        );
    }
    Ok(v)
}

fn main() {
    let criteria: [(u32, &str, fn() -> Result<Verdict>); 11] = [
        (1, "vacuum simultaneous PCC", fig1d),
        (2, "vacuum successive PCC", fig1b),
        (3, "coherent input vs classical field", fig1ef),
        (4, "kernel vs dense oracle", oracle_equivalence),
        (5, "unitarity", unitarity),
        (6, "energy conservation", energy_conservation),
        (7, "single-electron reduction", single_electron_reduction),
        (8, "classical-limit convergence", classical_limit),
        (9, "coupling/photon-number map trends", fig2_trends),
        (10, "post-selection symmetry", post_selection_symmetry),
        (11, "photon-state families", state_families),
    ];
    if !run_all(&criteria) {
        std::process::exit(1);
    }
}
