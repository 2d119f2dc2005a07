//! Acceptance criteria, one report line each.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use blenderlab::cover::{
    cover_ball_by_translates, covering_constant, make_net, preimage_depth, simplex_directions, verify_open_cover,
    CoverCertificate, Direction, Region,
};
use blenderlab::bump::hamiltonian_bump_translation;
use blenderlab::fiber::FiberMap;
use blenderlab::grassmann::{grassmann_distance, lift_map, tangency_codimension, PlaneChart, TangencyBlendingSpec};
use blenderlab::linalg::{Mat, Vector};
use blenderlab::pipeline::arc::build_arc_system;
use blenderlab::pipeline::certify::max_symplectic_defect;
use blenderlab::pipeline::{certify, robustness_sweep, CheckStatus, PipelineConfig};
use blenderlab::skew::{strong_stable_holonomy, MemorySystem, OneStepSystem, Word};
use blenderlab::symplectic::{symplectic_defect, PlaneFrame};

fn v(x: &[f64]) -> Vector {
    Vector::from_row_slice(x)
}

fn diag(x: &[f64]) -> Mat {
    Mat::from_diagonal(&v(x))
}

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn c1_flagship() -> Result<String, String> {
    let cfg = PipelineConfig::default();
    let start = Instant::now();
    let cert = certify(&cfg);
    let secs = start.elapsed().as_secs_f64();
    for c in &cert.checks {
        ensure(c.status == CheckStatus::Pass, format!("{} did not pass: {:?}", c.name, c.message))?;
        if let Some(m) = c.margin {
            ensure(m > 0.0, format!("{} margin {m}", c.name))?;
        }
    }
    ensure(cert.overall && cert.verdicts.transitivity && cert.verdicts.tangency, "overall verdict")?;
    let t1 = cert.check("tangency_blending_b1").unwrap();
    ensure(t1.parameters["maps"] == 20, "tangency family size")?;
    let tr = cert.check("transition").unwrap();
    ensure(tr.parameters["length"].as_u64().is_some_and(|l| l <= 5), "transition length")?;
    let gl = cert.check("globalization").unwrap();
    ensure(gl.parameters["forward"]["covered"] == true && gl.parameters["backward"]["covered"] == true, "coverage")?;
    let ph = cert.check("partial_hyperbolicity").unwrap();
    ensure(ph.parameters["nu_alpha"].as_f64() == Some(0.2), "nu")?;
    ensure(secs <= 60.0, format!("runtime {secs:.1}s"))?;
    Ok(format!("12 checks pass, runtime {secs:.2}s"))
}

fn sample_closure(region: &Region, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vector> {
    let far = 10.0 * (region.outer_radius() + 1.0);
    (0..n)
        .map(|i| {
            if i % 10 == 0 {
                let c = region.dimension();
                let dir = Vector::from_fn(c, |_, _| rng.gen_range(-1.0..1.0));
                region.project(&(region.center() + dir.normalize() * far))
            } else {
                region.sample(rng)
            }
        })
        .collect()
}

fn cover_counterexamples(maps: &[FiberMap], region: &Region, dir: Direction, n: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_closure(region, n, &mut rng)
        .iter()
        .filter(|p| preimage_depth(maps, region, dir, p) <= 0.0)
        .count()
}

fn lifted_counterexamples(spec: &TangencyBlendingSpec, n: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = &spec.region.base;
    let cap = &spec.region.cap;
    let chart = PlaneChart::new(&cap.base().map_err(|e| e.to_string())?);
    let bound = cap.radius_angle.tan();
    let family: Vec<_> = spec
        .maps
        .iter()
        .map(|m| match spec.direction {
            Direction::Forward => lift_map(m),
            Direction::Inverse => lift_map(&m.inverse()),
        })
        .collect();
    let mut bad = 0;
    for x in sample_closure(base, n, &mut rng) {
        let l = if rng.gen_bool(0.1) {
            if rng.gen_bool(0.5) { bound } else { -bound }
        } else {
            rng.gen_range(-bound..bound)
        };
        let plane = chart.plane(&Mat::from_element(1, 1, l)).map_err(|e| e.to_string())?;
        let hit = family.iter().any(|f| {
            f.apply_inverse(&x, &plane)
                .ok()
                .is_some_and(|(y, e)| base.depth(&y) > 0.0 && cap.depth(&e).is_ok_and(|d| d > 0.0))
        });
        if !hit {
            bad += 1;
        }
    }
    Ok(bad)
}

fn c2_cover_soundness() -> Result<String, String> {
    const N: usize = 100_000;
    let cfg = PipelineConfig::default();
    let arc = build_arc_system(&cfg).map_err(|e| e.to_string())?;
    let lay = arc.layout.as_ref().unwrap();
    let mut cases: Vec<(String, Vec<FiberMap>, Region, Direction, CoverCertificate)> = Vec::new();
    let mut push = |name: &str, maps: Vec<FiberMap>, region: Region, dir: Direction, h: f64| {
        let cert = verify_open_cover(&maps, &region, dir, h).unwrap();
        cases.push((name.into(), maps, region, dir, cert));
    };
    let b1 = arc.maps_of("blender_b1");
    let b2 = arc.maps_of("blender_b2");
    push("b1 forward", b1.clone(), lay.b1.b.clone(), Direction::Forward, 0.003);
    push("b1 inverse", b1, lay.b1.b.clone(), Direction::Inverse, 0.003);
    push("b2 inverse", b2, lay.b2.b.clone(), Direction::Inverse, 0.003);
    let halves: Vec<FiberMap> = [-0.6, 0.0, 0.6]
        .iter()
        .map(|&t| FiberMap::affine(Mat::from_element(1, 1, 0.5), v(&[t])).unwrap())
        .collect();
    push("interval halves", halves, Region::ball(v(&[0.0]), 1.0).unwrap(), Direction::Forward, 0.01);
    let dirs = simplex_directions(2).unwrap();
    let shifts: Vec<FiberMap> = dirs.iter().map(|u| FiberMap::translation(u * 0.5)).collect();
    push("disk translates", shifts, Region::ball(v(&[0.0, 0.0]), 1.0).unwrap(), Direction::Forward, 0.01);

    let mut lines = Vec::new();
    for (i, (name, maps, region, dir, cert)) in cases.iter().enumerate() {
        ensure(cert.pass, format!("{name} certificate should pass"))?;
        let bad = cover_counterexamples(maps, region, *dir, N, 100 + i as u64);
        ensure(bad == 0, format!("{name}: {bad} counterexamples"))?;
        lines.push(name.clone());
    }
    for (i, spec) in [&lay.tangency1, &lay.tangency2].into_iter().enumerate() {
        let bad = lifted_counterexamples(spec, N, 200 + i as u64)?;
        ensure(bad == 0, format!("tangency {i}: {bad} counterexamples"))?;
    }
    Ok(format!("{} certificates x {N} samples, 0 counterexamples", lines.len() + 2))
}

fn c3_simplex_constant() -> Result<String, String> {
    let eps = 1.0;
    for c in 1..=6 {
        let dirs = simplex_directions(c).map_err(|e| e.to_string())?;
        let k = covering_constant(&dirs).map_err(|e| e.to_string())?;
        ensure((k - 1.0 / c as f64).abs() < 1e-6, format!("kappa_{c} = {k}"))?;
        let maps = |delta: f64| -> Vec<FiberMap> { dirs.iter().map(|u| FiberMap::translation(u * delta)).collect() };
        let ball = Region::ball(Vector::zeros(c), eps).unwrap();
        if c == 1 {
            // κ₁ = 1 puts δ = ε on the threshold δ < min(ε, 2εκ): the origin is uncovered.
            let edge = cover_ball_by_translates(eps, eps * k, &dirs, 0.01).map_err(|e| e.to_string())?;
            ensure(!edge.pass, format!("c=1 threshold certificate passed, margin {}", edge.margin))?;
            ensure(preimage_depth(&maps(eps), &ball, Direction::Forward, &v(&[0.0])) == 0.0, "origin depth")?;
            let inside = cover_ball_by_translates(eps, 0.9 * eps * k, &dirs, 0.01).map_err(|e| e.to_string())?;
            ensure(inside.pass, "c=1: delta = 0.9 eps should pass")?;
        } else if c <= 4 {
            // Certified net; the worst margin is eps·(1 − sqrt(1 − κ²)).
            let margin = eps * (1.0 - (1.0 - k * k).sqrt());
            let h = 0.9 * margin;
            let pass = cover_ball_by_translates(eps, eps * k, &dirs, h).map_err(|e| e.to_string())?;
            ensure(pass.pass, format!("c={c}: delta = eps*kappa should pass, margin {}", pass.margin))?;
            let fail = cover_ball_by_translates(eps, 3.0 * eps * k, &dirs, 0.1).map_err(|e| e.to_string())?;
            ensure(!fail.pass, format!("c={c}: delta = 3 eps*kappa should fail"))?;
        } else {
            // Nets in R^5, R^6 are too large; sample the closure instead.
            ensure(cover_counterexamples(&maps(eps * k), &ball, Direction::Forward, 100_000, c as u64) == 0, "sampled pass")?;
        }
        // The point opposite a direction escapes every translate at 3·eps·κ.
        let far = maps(3.0 * eps * k);
        ensure(
            dirs.iter().any(|u| preimage_depth(&far, &ball, Direction::Forward, &(-u * eps)) < 0.0),
            format!("c={c}: missing failure witness"),
        )?;
    }
    Ok("kappa_c = 1/c for c = 1..6; delta = eps*kappa certified for c = 2..4, sampled for c = 5, 6, threshold (margin 0) at c = 1; 3 eps*kappa fails".into())
}

fn c4_codimension() -> Result<String, String> {
    let mut cases = 0;
    for c in 2..=6usize {
        for ell in 1..=c / 2 {
            for cu in 1..c {
                for cs in 1..c {
                    let got = tangency_codimension(cu, cs, ell, c).map_err(|e| e.to_string())?;
                    let (ci, cui, csi, li) = (c as i64, cu as i64, cs as i64, ell as i64);
                    let c_t = ci - (cui + csi - li);
                    let (i1, i2) = (ci - cui, csi);
                    let admissible = 0.max(i2 - i1) < li && li <= (ci - i1).min(i2);
                    ensure(got.c_t == c_t && got.admissible == admissible, format!("c={c} l={ell} cu={cu} cs={cs}"))?;
                    cases += 1;
                }
            }
        }
    }
    ensure(tangency_codimension(0, 1, 1, 2).is_err(), "index 0 rejected")?;
    Ok(format!("{cases} cases agree exactly"))
}

fn c5_symplectic_defects() -> Result<String, String> {
    let arc = build_arc_system(&PipelineConfig::default()).map_err(|e| e.to_string())?;
    let worst = max_symplectic_defect(&arc, 100);
    ensure(worst <= 1e-8, format!("arc defect {worst}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let bump = hamiltonian_bump_translation(v(&[0.0, 0.0]), 1.0, 2.0, v(&[0.1, 0.05])).map_err(|e| e.to_string())?;
    let bump = FiberMap::BumpTranslation(bump);
    let affine = FiberMap::affine(diag(&[3.0, 1.0 / 3.0]), v(&[0.2, -0.1])).unwrap();
    let composed = FiberMap::compose(vec![affine.clone(), bump.clone(), affine.inverse()]).unwrap();
    let region = Region::ball(v(&[0.0, 0.0]), 2.5).unwrap();
    let mut max = 0.0f64;
    for map in [&affine, &bump, &composed] {
        for _ in 0..100 {
            let p = region.sample(&mut rng);
            max = max.max(symplectic_defect(&map.jacobian(&p)).unwrap());
        }
    }
    ensure(max <= 1e-8, format!("library maps defect {max}"))?;
    let control = FiberMap::affine(diag(&[1.1, 1.0]), v(&[0.0, 0.0])).unwrap();
    let bad = symplectic_defect(&control.jacobian(&v(&[0.0, 0.0]))).unwrap();
    ensure(bad >= 1e-2, format!("control defect {bad}"))?;
    Ok(format!("max defect {:.1e} over {} arc maps and 3 library maps; control {bad:.2}", worst.max(max), arc.system.maps.len()))
}

fn c6_grassmann_contraction() -> Result<String, String> {
    let lifted = lift_map(&FiberMap::linear(diag(&[2.0, 0.5])).unwrap());
    let o = v(&[0.0, 0.0]);
    let e_u = PlaneFrame::coordinate(2, &[0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let s: f64 = rng.gen_range(-3.0..3.0);
        let e = PlaneFrame::from_vectors(&[v(&[1.0, s])]).unwrap();
        let (_, f) = lifted.apply(&o, &e).map_err(|x| x.to_string())?;
        let ratio = (e.frame()[(1, 0)] / e.frame()[(0, 0)]) / (f.frame()[(1, 0)] / f.frame()[(0, 0)]);
        worst = worst.max((ratio / 4.0 - 1.0).abs());
        let _ = grassmann_distance(&e_u, &f).map_err(|x| x.to_string())?;
    }
    ensure(worst <= 0.01, format!("slope contraction off by {worst}"))?;

    let lambda = diag(&[3.0, 1.5, 1.0 / 3.0, 1.0 / 1.5]);
    let lifted = lift_map(&FiberMap::linear(lambda).unwrap());
    let e_uu = PlaneFrame::coordinate(4, &[0, 1]).unwrap();
    let o = Vector::zeros(4);
    let expected = (1.0 / 1.5) / 1.5;
    let mut worst4: f64 = 0.0;
    for _ in 0..100 {
        let m = Mat::from_fn(4, 2, |_, _| rng.gen_range(-1.0..1.0));
        let mut e = PlaneFrame::from_span(&m).map_err(|x| x.to_string())?;
        for _ in 0..20 {
            e = lifted.apply(&o, &e).map_err(|x| x.to_string())?.1;
        }
        let d0 = grassmann_distance(&e_uu, &e).map_err(|x| x.to_string())?;
        let d1 = grassmann_distance(&e_uu, &lifted.apply(&o, &e).map_err(|x| x.to_string())?.1).map_err(|x| x.to_string())?;
        worst4 = worst4.max((d1 / d0 / expected - 1.0).abs());
    }
    ensure(worst4 <= 0.1, format!("c=4 rate off by {worst4}"))?;
    Ok(format!("c=2 factor 4 within {:.1e}; c=4 rate within {:.1}%", worst, 100.0 * worst4))
}

fn c7_robustness() -> Result<String, String> {
    let cfg = PipelineConfig::default();
    let probe = robustness_sweep(&cfg, &[0.0], 1).map_err(|e| e.to_string())?;
    let (m, l) = (probe.base_margin, probe.lipschitz);
    ensure(m > 0.0 && probe.rows[0].pass, "unperturbed checks must pass")?;
    let small = m / (4.0 * l);
    let safe = robustness_sweep(&cfg, &[small], 20).map_err(|e| e.to_string())?;
    ensure(safe.rows.len() == 20 && safe.rows.iter().all(|r| r.pass), format!("a trial failed at eta = {small:.2e}"))?;
    let large = 10.0 * m;
    let broken = robustness_sweep(&cfg, &[large], 3).map_err(|e| e.to_string())?;
    ensure(broken.rows.iter().any(|r| !r.pass), format!("no failure at eta = {large:.2e}"))?;
    Ok(format!("m = {m:.4}, L = {l:.2}: 20/20 pass at eta = {small:.2e}, failures at eta = {large:.3}"))
}

fn c8_holonomy() -> Result<String, String> {
    let maps = vec![FiberMap::translation(v(&[0.1])), FiberMap::translation(v(&[-0.2]))];
    let shifts = vec![v(&[1.0]), v(&[-1.0])];
    let sys = MemorySystem::new(0.5, 1.0, maps, shifts, 40).map_err(|e| e.to_string())?;
    let window = 80;
    let xi = Word::from_fn(window, |i| if i < 0 && i % 3 == 0 { 2 } else { 1 }).unwrap();
    let zeta = Word::from_fn(window, |i| if i < 0 && i % 2 == 0 { 2 } else { 1 }).unwrap();
    let x = v(&[0.25]);
    let at = |n: usize| strong_stable_holonomy(&sys, &xi, &zeta, &x, n).map(|h| h.point[0]);
    let limit = at(60).map_err(|e| e.to_string())?;
    let e4 = (at(4).map_err(|e| e.to_string())? - limit).abs();
    let e8 = (at(8).map_err(|e| e.to_string())? - limit).abs();
    let ratio = e8 / e4;
    let target = 2f64.powi(-4);
    ensure((ratio / target - 1.0).abs() <= 0.2, format!("ratio {ratio}"))?;

    let one_step = OneStepSystem::new(0.5, 1.0, vec![
        FiberMap::affine(Mat::from_element(1, 1, 0.5), v(&[0.0])).unwrap(),
        FiberMap::affine(Mat::from_element(1, 1, 0.5), v(&[0.5])).unwrap(),
    ])
    .unwrap();
    for depth in [0, 4, 8] {
        let h = strong_stable_holonomy(&one_step, &xi, &zeta, &x, depth).map_err(|e| e.to_string())?;
        ensure(h.point == x && h.error_bound == 0.0, "one-step holonomy must be the identity")?;
    }
    Ok(format!("error ratio depth 8/4 = {ratio:.5} (2^-4 = {target:.5}); one-step exact"))
}

fn c9_arc_endpoint() -> Result<String, String> {
    let base = PipelineConfig::default();
    let compact = Region::from_corners(&[0.0, 0.0], &[3.0, 3.0]).unwrap();
    let points = make_net(&compact, 0.1).unwrap();
    let sup = |eps: f64| -> Result<f64, String> {
        let arc = build_arc_system(&PipelineConfig { eps, ..base.clone() }).map_err(|e| e.to_string())?;
        Ok(arc.system.maps.iter().map(|m| m.sup_displacement(&points)).fold(0.0, f64::max))
    };
    let zero = sup(0.0)?;
    ensure(zero == 0.0, format!("eps = 0 displacement {zero}"))?;
    let grid = [0.5, 0.25, 0.1, 0.05];
    let values: Vec<f64> = grid.iter().map(|&e| sup(e)).collect::<Result<_, _>>()?;
    ensure(values.windows(2).all(|w| w[1] <= w[0]), format!("not monotone: {values:?}"))?;
    let shown: Vec<String> = values.iter().map(|s| format!("{s:.3}")).collect();
    Ok(format!("eps = 0 gives 0; sup-distance over {grid:?} = [{}]", shown.join(", ")))
}

fn c10_determinism() -> Result<String, String> {
    let cfg = PipelineConfig::default();
    let a = certify(&cfg).reproducible_json().map_err(|e| e.to_string())?;
    let b = certify(&cfg).reproducible_json().map_err(|e| e.to_string())?;
    ensure(a == b, "certificates differ")?;
    Ok(format!("{} identical bytes", a.len()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, Check); 10] = [
        ("flagship pipeline", c1_flagship),
        ("cover soundness", c2_cover_soundness),
        ("simplex constant", c3_simplex_constant),
        ("codimension arithmetic", c4_codimension),
        ("symplectic defects", c5_symplectic_defects),
        ("grassmannian contraction", c6_grassmann_contraction),
        ("robustness margins", c7_robustness),
        ("holonomy decay", c8_holonomy),
        ("arc endpoint", c9_arc_endpoint),
        ("determinism", c10_determinism),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let line = match &outcome {
            Ok(detail) => format!("criterion {:>2} {name}: PASS ({detail})\n", i + 1),
            Err(why) => format!("criterion {:>2} {name}: FAIL ({why})\n", i + 1),
        };
        let _ = err.write_all(line.as_bytes());
        if outcome.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
