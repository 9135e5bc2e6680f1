mod common;

use common::*;
use fuksurf_core::complex::{cone, decompose, ext, hom_complex, minimize, ChainMap, ExtTable, TwistedComplex};
use fuksurf_core::curve::{compile_band, compile_string, companion_matrix, BandWord, Letter, LocalSystem};
use fuksurf_core::error::Error;
use fuksurf_core::fan::{Combo, Fan, FanQuiver, GradingSpec};
use fuksurf_core::fixtures;
use fuksurf_core::linalg::Mat;
use fuksurf_core::scalar::Scalar;
use fuksurf_core::surface::Dissection;
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn all_dissections() -> Vec<(String, Dissection)> {
    let mut out: Vec<(String, Dissection)> = (4..=8)
        .map(|n| (format!("{n}-gon"), fixtures::disk(n)))
        .collect();
    out.push(("annulus".into(), fixtures::annulus()));
    out.push(("wrapped disk".into(), fixtures::punctured_disk()));
    out.push(("threaded disk".into(), fixtures::disk_through_point()));
    out
}

#[test]
fn dissection_reports_are_consistent() {
    for (label, d) in all_dissections() {
        let report = d.validate().unwrap_or_else(|e| panic!("{label}: {e}"));
        // Every arc shows two sides across the face walks, every boundary
        // gap exactly one stop corner.
        let side_total: usize = report.faces.iter().map(|f| f.arc_sides().len()).sum();
        assert_eq!(side_total, 2 * d.arcs.len(), "{label}: arc sides");
        let stop_total: usize = report.faces.iter().map(|f| f.stop_count()).sum();
        let gaps: usize = d.boundary.iter().map(Vec::len).sum();
        assert_eq!(stop_total, gaps, "{label}: stops");
        // Independent cell count: points carrying at least one arc end (or
        // lying on the boundary), edges = arcs plus boundary gaps.
        let used: std::collections::BTreeSet<&str> = d
            .arcs
            .iter()
            .flat_map(|a| [a.from.as_str(), a.to.as_str()])
            .chain(d.boundary.iter().flatten().map(String::as_str))
            .collect();
        let v = used.len() as i64;
        let e = (d.arcs.len() + gaps) as i64;
        let f = report.faces.len() as i64;
        assert_eq!(report.euler_characteristic, v - e + f, "{label}: cell count");
        assert_eq!(
            report.euler_characteristic,
            2 - 2 * report.genus - report.boundary_count as i64,
            "{label}: genus consistency"
        );
        // Angle census: a boundary point with k ends contributes k-1 angles,
        // an interior point contributes k.
        let angles = d.enumerate_angles().unwrap_or_else(|e| panic!("{label}: {e}"));
        let mut expected = 0usize;
        for p in &d.points {
            let ends = d.ribbon.get(&p.id).map_or(0, Vec::len);
            expected += match p.kind {
                fuksurf_core::surface::PointKind::Boundary => ends.saturating_sub(1),
                fuksurf_core::surface::PointKind::Interior => ends,
            };
        }
        assert_eq!(angles.len(), expected, "{label}: angle count");
        // The dual dissection is valid whenever it exists; only the fully
        // wrapped fixture legitimately refuses.
        match d.laminate() {
            Ok(dual) => {
                dual.validate().unwrap_or_else(|e| panic!("{label}: dual invalid: {e}"));
            }
            Err(_) => assert_eq!(label, "wrapped disk", "{label}: laminate refused"),
        }
    }
}

fn fixture_quivers() -> Vec<FanQuiver> {
    vec![
        fixtures::chain_quiver(),
        fixtures::pants_quiver(),
        fixtures::annulus_quiver(),
        FanQuiver::from_dissection(&fixtures::disk(5), &GradingSpec::canonical_zero())
            .expect("pentagon fixture is valid"),
        FanQuiver::from_dissection(&fixtures::punctured_disk(), &GradingSpec::canonical_zero())
            .expect("wrapped fixture is valid"),
    ]
}

#[test]
fn fan_algebras_are_gentle() {
    for q in fixture_quivers() {
        let singles: Vec<Fan> = (0..q.arrows.len())
            .map(|i| fan(&q, &[q.arrows[i].id.as_str()]))
            .collect();
        for (i, f) in singles.iter().enumerate() {
            let after = singles
                .iter()
                .filter(|g| q.fan_source(g) == q.fan_target(f))
                .filter(|g| q.compose_pair(g, f).expect("endpoints match").is_some())
                .count();
            let before = singles
                .iter()
                .filter(|g| q.fan_target(g) == q.fan_source(f))
                .filter(|g| q.compose_pair(f, g).expect("endpoints match").is_some())
                .count();
            assert!(
                after <= 1 && before <= 1,
                "arrow {} composes nonzero with {after} successors and {before} predecessors",
                q.arrows[i].id
            );
        }
        for v in 0..q.vertices.len() {
            let out = q.arrows.iter().filter(|a| a.source == v).count();
            let inc = q.arrows.iter().filter(|a| a.target == v).count();
            assert!(
                out <= 2 && inc <= 2,
                "vertex {} has {out} outgoing and {inc} incoming arrows",
                q.vertices[v]
            );
        }
    }
}

#[test]
fn orientation_flip_toggles_exactly_incident_angles() {
    let mut cases: Vec<(String, Dissection)> = vec![
        ("4-gon".into(), fixtures::disk(4)),
        ("6-gon".into(), fixtures::disk(6)),
        ("annulus".into(), fixtures::annulus()),
        ("wrapped disk".into(), fixtures::punctured_disk()),
    ];
    for (label, d) in cases.iter_mut() {
        let arcs: Vec<String> = d.arcs.iter().map(|a| a.id.clone()).collect();
        for arc in arcs {
            let q1 = FanQuiver::from_dissection(d, &GradingSpec::mod2_orientation())
                .unwrap_or_else(|e| panic!("{label}: {e}"));
            let mut flipped = d.clone();
            fixtures::flip_arc(&mut flipped, &arc);
            let q2 = FanQuiver::from_dissection(&flipped, &GradingSpec::mod2_orientation())
                .unwrap_or_else(|e| panic!("{label}: flipped {arc}: {e}"));
            let angles = d.enumerate_angles().expect("fixture angles");
            assert_eq!(q1.arrows.len(), q2.arrows.len(), "{label}: arrow census");
            for a in &angles {
                let d1 = q1.arrows.iter().find(|x| x.id == a.id).expect("angle id").degree;
                let d2 = q2.arrows.iter().find(|x| x.id == a.id).expect("angle id").degree;
                let incident = a.source.arc == arc || a.target.arc == arc;
                assert_eq!(
                    d1 != d2,
                    incident,
                    "{label}: flipping {arc} mishandled angle {}",
                    a.id
                );
            }
        }
    }
}

#[test]
fn rank_r_trivial_band_matches_rank_one_sum() {
    let q = fixtures::annulus_quiver();
    let word = |sys: LocalSystem| BandWord {
        arcs: vec![vtx(&q, "L"), vtx(&q, "R")],
        letters: vec![fwd(fan(&q, &["m_out:0"])), bwd(fan(&q, &["m_in:0"]))],
        local_system: sys,
        base_position: 0,
    };
    let single = compile_band(
        &q,
        &word(companion_matrix(rat(), &[qn(1)]).expect("trivial system")),
        W,
    )
    .expect("rank-1 band compiles");
    let alpha_word = fuksurf_core::curve::StringWord {
        arcs: vec![vtx(&q, "L"), vtx(&q, "R"), vtx(&q, "L")],
        letters: vec![fwd(fan(&q, &["m_out:0"])), bwd(fan(&q, &["m_in:0"]))],
        base_position: 0,
    };
    let alpha = compile_string(&q, rat(), &alpha_word, W).expect("probe arc compiles");
    for r in 2..=3usize {
        let sys = LocalSystem::from_matrix(Mat::identity(rat(), r)).expect("identity system");
        let big = compile_band(&q, &word(sys), W).expect("identity band compiles");
        let mut sum = TwistedComplex::empty(&q, rat());
        for _ in 0..r {
            sum = sum.direct_sum(&single);
        }
        let mut probes: Vec<TwistedComplex> = (0..q.vertices.len())
            .map(|v| TwistedComplex::projective(&q, rat(), v, 0))
            .collect();
        probes.push(alpha.clone());
        for p in &probes {
            let lhs = ext(&q, &big, p, W).expect("ext").table;
            let rhs = ext(&q, &sum, p, W).expect("ext").table;
            assert_eq!(lhs, rhs, "rank {r}: pairing into probe differs");
            let lhs = ext(&q, p, &big, W).expect("ext").table;
            let rhs = ext(&q, p, &sum, W).expect("ext").table;
            assert_eq!(lhs, rhs, "rank {r}: pairing from probe differs");
        }
    }
}

#[test]
fn disjoint_sums_fall_apart() {
    let q = fixtures::chain_quiver();
    let two_step = TwistedComplex::new(
        &q,
        rat(),
        vec![(vtx(&q, "C"), 0), (vtx(&q, "A"), 1)],
        vec![(0, 1, one(fan(&q, &["a", "b"])))],
    );
    let point = TwistedComplex::projective(&q, rat(), vtx(&q, "B"), 0);
    let pieces = decompose(&q, &two_step.direct_sum(&point), W).expect("decompose");
    assert_eq!(pieces.len(), 2);
    let mut sizes: Vec<usize> = pieces.iter().map(|p| p.complex.summands.len()).collect();
    sizes.sort_unstable();
    assert_eq!(sizes, vec![1, 2]);
}

#[test]
fn similar_local_systems_share_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1273_9a44);
    for _ in 0..48 {
        let n = rng.random_range(1..=3usize);
        let m = loop {
            let cand = Mat::from_rows(
                rat(),
                (0..n)
                    .map(|_| (0..n).map(|_| qn(rng.random_range(-3..=3))).collect())
                    .collect(),
            );
            if cand.rank() == n {
                break cand;
            }
        };
        let p = loop {
            let cand = Mat::from_rows(
                rat(),
                (0..n)
                    .map(|_| (0..n).map(|_| qn(rng.random_range(-3..=3))).collect())
                    .collect(),
            );
            if cand.rank() == n {
                break cand;
            }
        };
        let p_inv_cols: Vec<Vec<Scalar>> = (0..n)
            .map(|j| {
                let e: Vec<Scalar> = (0..n).map(|i| if i == j { qn(1) } else { qn(0) }).collect();
                p.solve(&e).expect("p is invertible")
            })
            .collect();
        let p_inv = Mat::from_rows(
            rat(),
            (0..n)
                .map(|i| (0..n).map(|j| p_inv_cols[j][i].clone()).collect())
                .collect(),
        );
        let conj = p.mul(&m).mul(&p_inv);
        let a = LocalSystem::from_matrix(m).expect("invertible").invariants();
        let b = LocalSystem::from_matrix(conj).expect("invertible").invariants();
        assert_eq!(a, b);
    }
}

fn compile_valid_string(gen: &mut WordGen, q: &FanQuiver) -> TwistedComplex {
    for _ in 0..10_000 {
        let w = gen.string_word(q);
        if let Ok(x) = compile_string(q, rat(), &w, W) {
            return x;
        }
    }
    panic!("no compilable open word found");
}

fn allowed(e: &Error) -> bool {
    matches!(
        e,
        Error::BrokenWord { .. }
            | Error::SquareZeroViolation { .. }
            | Error::UngradableBand { .. }
            | Error::SingularLocalSystem
    )
}

fn word_quiver(i: usize) -> FanQuiver {
    match i % 4 {
        0 => fixtures::chain_quiver(),
        1 => fixtures::pants_quiver_z2(),
        2 => fixtures::pants_quiver(),
        _ => fixtures::annulus_quiver(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 192, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn compiled_words_validate(seed in any::<u64>(), qi in 0usize..4) {
        let q = word_quiver(qi);
        let mut gen = WordGen::new(&q, seed);
        let w = gen.string_word(&q);
        match compile_string(&q, rat(), &w, W) {
            Ok(x) => x.validate(&q, W).expect("compiled open word validates"),
            Err(e) => prop_assert!(allowed(&e), "unexpected error: {e}"),
        }
        if let Some(w) = gen.band_word(&q, rat()) {
            match compile_band(&q, &w, W) {
                Ok(x) => x.validate(&q, W).expect("compiled cycle validates"),
                Err(e) => prop_assert!(allowed(&e), "unexpected error: {e}"),
            }
        }
    }

    #[test]
    fn composition_is_associative_unital_and_graded(seed in any::<u64>(), qi in 0usize..5) {
        let q = &fixture_quivers()[qi];
        let nv = q.vertices.len();
        let mut by_source: Vec<Vec<Fan>> = vec![Vec::new(); nv];
        for u in 0..nv {
            for v in 0..nv {
                let (fans, _) = q.enumerate_fans(u, v, 2);
                for f in fans {
                    if !matches!(f, Fan::Lazy(_)) {
                        by_source[u].push(f);
                    }
                }
            }
        }
        let all: Vec<Fan> = by_source.iter().flatten().copied().collect();
        prop_assume!(!all.is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = all[rng.random_range(0..all.len())];
        let lazy_t = Fan::Lazy(q.fan_target(&f));
        let lazy_s = Fan::Lazy(q.fan_source(&f));
        prop_assert_eq!(q.compose_pair(&lazy_t, &f).expect("endpoints"), Some(f));
        prop_assert_eq!(q.compose_pair(&f, &lazy_s).expect("endpoints"), Some(f));
        let outgoing = &by_source[q.fan_target(&f)];
        prop_assume!(!outgoing.is_empty());
        let g = outgoing[rng.random_range(0..outgoing.len())];
        if let Some(gf) = q.compose_pair(&g, &f).expect("endpoints") {
            prop_assert_eq!(
                q.fan_degree(&gf),
                q.group.normalize(q.fan_degree(&g) + q.fan_degree(&f))
            );
            prop_assert!(q.fan_winding(&gf) >= q.fan_winding(&g) + q.fan_winding(&f));
        }
        let onward = &by_source[q.fan_target(&g)];
        prop_assume!(!onward.is_empty());
        let h = onward[rng.random_range(0..onward.len())];
        let left = match q.compose_pair(&g, &f).expect("endpoints") {
            None => None,
            Some(gf) => q.compose_pair(&h, &gf).expect("endpoints"),
        };
        let right = match q.compose_pair(&h, &g).expect("endpoints") {
            None => None,
            Some(hg) => q.compose_pair(&hg, &f).expect("endpoints"),
        };
        prop_assert_eq!(left, right);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 80, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn morphism_differential_squares_to_zero(seed in any::<u64>(), qi in 0usize..2) {
        let q = if qi == 0 { fixtures::pants_quiver_z2() } else { fixtures::pants_quiver() };
        let mut gen = WordGen::new(&q, seed);
        let x = compile_valid_string(&mut gen, &q);
        let y = compile_valid_string(&mut gen, &q);
        let hc = hom_complex(&q, &x, &y, W).expect("hom complex");
        for k in 0..hc.diffs.len() {
            if let Some(n) = hc.next_slot(k) {
                let sq = hc.diffs[n].mul(&hc.diffs[k]);
                for i in 0..sq.rows {
                    for j in 0..sq.cols {
                        prop_assert!(sq.at(i, j).is_zero(), "D² nonzero at slot {k}");
                    }
                }
            }
        }
    }

    #[test]
    fn euler_counts_agree_between_hom_and_ext(seed in any::<u64>(), qi in 0usize..3) {
        let q = match qi {
            0 => fixtures::pants_quiver(),
            1 => fixtures::pants_quiver_z2(),
            _ => fixtures::chain_quiver(),
        };
        let mut gen = WordGen::new(&q, seed);
        let x = compile_valid_string(&mut gen, &q);
        let y = compile_valid_string(&mut gen, &q);
        let hc = hom_complex(&q, &x, &y, W).expect("hom complex");
        prop_assert!(hc.truncated.iter().all(|&t| !t), "fixture quivers never truncate");
        let e = ext(&q, &x, &y, W).expect("ext").table;
        let sign = |d: i64| if d.rem_euclid(2) == 0 { 1i64 } else { -1 };
        let hom_sum: i64 = (0..hc.basis.len())
            .map(|k| sign(hc.degree_of_slot(k)) * hc.basis[k].len() as i64)
            .sum();
        let ext_sum: i64 = e
            .dims
            .iter()
            .enumerate()
            .map(|(i, &d)| sign(e.min_degree + i as i64) * d as i64)
            .sum();
        prop_assert_eq!(hom_sum, ext_sum);
    }

    #[test]
    fn identity_cone_minimizes_away(seed in any::<u64>()) {
        let q = fixtures::pants_quiver_z2();
        let mut gen = WordGen::new(&q, seed);
        let x = compile_valid_string(&mut gen, &q);
        let comps: Vec<(usize, usize, Combo)> = x
            .summands
            .iter()
            .enumerate()
            .map(|(i, &(v, _))| (i, i, Combo::single(Fan::Lazy(v), qn(1))))
            .collect();
        let sigma = ChainMap::new(x.shift(1), x.clone(), 1, comps);
        let c = cone(&q, &sigma, W).expect("cone of the degree-one identity");
        let m = minimize(&q, &c, W).expect("minimize");
        prop_assert!(m.is_empty(), "left {} summands", m.summands.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn shift_reindexes_ext_tables(seed in any::<u64>(), qi in 0usize..2) {
        let q = if qi == 0 { fixtures::pants_quiver() } else { fixtures::annulus_quiver() };
        let mut gen = WordGen::new(&q, seed);
        let x = compile_valid_string(&mut gen, &q);
        let y = compile_valid_string(&mut gen, &q);
        let base = ext(&q, &x, &y, W).expect("ext").table;
        let src = ext(&q, &x.shift(1), &y, W).expect("ext").table;
        let tgt = ext(&q, &x, &y.shift(1), W).expect("ext").table;
        for d in -6..=6i64 {
            prop_assert_eq!(dim_at(&src, d), dim_at(&base, d - 1));
            prop_assert_eq!(trunc_at(&src, d), trunc_at(&base, d - 1));
            prop_assert_eq!(dim_at(&tgt, d), dim_at(&base, d + 1));
            prop_assert_eq!(trunc_at(&tgt, d), trunc_at(&base, d + 1));
        }
    }

    #[test]
    fn reduction_preserves_projective_pairings(seed in any::<u64>(), qi in 0usize..2, double in any::<bool>()) {
        let q = if qi == 0 { fixtures::chain_quiver() } else { fixtures::pants_quiver_z2() };
        let mut gen = WordGen::new(&q, seed);
        let mut x = compile_valid_string(&mut gen, &q);
        if double {
            let y = compile_valid_string(&mut gen, &q);
            x = x.direct_sum(&y);
        }
        let m = minimize(&q, &x, W).expect("minimize");
        let pieces = decompose(&q, &x, W).expect("decompose");
        let mut resum = TwistedComplex::empty(&q, rat());
        for p in &pieces {
            resum = resum.direct_sum(&p.complex);
        }
        for v in 0..q.vertices.len() {
            let proj = TwistedComplex::projective(&q, rat(), v, 0);
            let into: Vec<ExtTable> = [&x, &m, &resum]
                .iter()
                .map(|z| ext(&q, z, &proj, W).expect("ext").table)
                .collect();
            prop_assert!(into[0] == into[1] && into[0] == into[2], "into {}", q.vertices[v]);
            let from: Vec<ExtTable> = [&x, &m, &resum]
                .iter()
                .map(|z| ext(&q, &proj, z, W).expect("ext").table)
                .collect();
            prop_assert!(from[0] == from[1] && from[0] == from[2], "from {}", q.vertices[v]);
        }
    }

    #[test]
    fn flips_preserve_cycle_obstruction(seed in any::<u64>(), flip_inner in any::<bool>()) {
        let q1 = fixtures::annulus_quiver();
        let mut gen = WordGen::new(&q1, seed);
        prop_assume!(gen.band_word(&q1, rat()).is_some());
        let mut gen = WordGen::new(&q1, seed);
        let w = gen.band_word(&q1, rat()).expect("just produced one");
        let arc = if flip_inner { "L" } else { "R" };
        let mut d2 = fixtures::annulus();
        fixtures::flip_arc(&mut d2, arc);
        let q2 = FanQuiver::from_dissection(&d2, &GradingSpec::mod2_orientation())
            .expect("flipped annulus is valid");
        let letters2: Vec<Letter> = w
            .letters
            .iter()
            .map(|l| {
                let ids: Vec<String> = q1
                    .fan_arrows(&l.fan)
                    .into_iter()
                    .map(|i| q1.arrows[i].id.clone())
                    .collect();
                Letter {
                    fan: q2.fan_from_arrow_ids(&ids).expect("ids survive the flip"),
                    direction: l.direction,
                }
            })
            .collect();
        let before = closure_total(&q1, &w.letters);
        let after = closure_total(&q2, &letters2);
        prop_assert_eq!((before - after).rem_euclid(2), 0);
    }
}
