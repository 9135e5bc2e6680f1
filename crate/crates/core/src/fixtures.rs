//! Small reference surfaces used throughout the test suite.

use crate::fan::{FanQuiver, GradingGroup, GradingSpec};
use crate::surface::{Arc, ArcEnd, Dissection, Enclosure, MarkedPoint, PointKind, Side, WhichEnd};
use std::collections::BTreeMap;

fn pt(id: &str, kind: PointKind) -> MarkedPoint {
    MarkedPoint {
        id: id.into(),
        kind,
    }
}

fn arc(id: &str, from: &str, to: &str) -> Arc {
    Arc {
        id: id.into(),
        from: from.into(),
        to: to.into(),
    }
}

fn end(arc: &str, which: WhichEnd) -> ArcEnd {
    ArcEnd {
        arc: arc.into(),
        which,
    }
}

/// Annulus with one marked point per boundary circle and two parallel arcs
/// L, R from the outer point to the inner point, cutting two squares.
pub fn annulus() -> Dissection {
    let mut ribbon = BTreeMap::new();
    ribbon.insert(
        "m_out".to_string(),
        vec![end("L", WhichEnd::From), end("R", WhichEnd::From)],
    );
    ribbon.insert(
        "m_in".to_string(),
        vec![end("L", WhichEnd::To), end("R", WhichEnd::To)],
    );
    Dissection {
        points: vec![
            pt("m_out", PointKind::Boundary),
            pt("m_in", PointKind::Boundary),
        ],
        boundary: vec![vec!["m_out".into()], vec!["m_in".into()]],
        arcs: vec![arc("L", "m_out", "m_in"), arc("R", "m_out", "m_in")],
        ribbon,
        enclosures: vec![],
    }
}

/// Disk with `n ≥ 2` boundary points m1..mn and the boundary-parallel chain
/// of arcs B1..B(n-1), Bi: mi → m(i+1).
pub fn disk(n: usize) -> Dissection {
    assert!(n >= 2);
    let points: Vec<MarkedPoint> = (1..=n)
        .map(|i| pt(&format!("m{i}"), PointKind::Boundary))
        .collect();
    let arcs: Vec<Arc> = (1..n)
        .map(|i| arc(&format!("B{i}"), &format!("m{i}"), &format!("m{}", i + 1)))
        .collect();
    let mut ribbon = BTreeMap::new();
    for i in 1..=n {
        let mut ends = Vec::new();
        if i >= 2 {
            ends.push(end(&format!("B{}", i - 1), WhichEnd::To));
        }
        if i < n {
            ends.push(end(&format!("B{i}"), WhichEnd::From));
        }
        ribbon.insert(format!("m{i}"), ends);
    }
    Dissection {
        points,
        boundary: vec![(1..=n).map(|i| format!("m{i}")).collect()],
        arcs,
        ribbon,
        enclosures: vec![],
    }
}

/// Disk with one boundary point m, a fully wrapped interior point p joined to
/// m by three arcs A, B, C, and two floating punctures q1, q2 inside the two
/// bigons those arcs cut out.
pub fn punctured_disk() -> Dissection {
    let mut ribbon = BTreeMap::new();
    ribbon.insert(
        "m".to_string(),
        vec![
            end("B", WhichEnd::From),
            end("A", WhichEnd::From),
            end("C", WhichEnd::From),
        ],
    );
    ribbon.insert(
        "p".to_string(),
        vec![
            end("A", WhichEnd::To),
            end("B", WhichEnd::To),
            end("C", WhichEnd::To),
        ],
    );
    Dissection {
        points: vec![
            pt("m", PointKind::Boundary),
            pt("p", PointKind::Interior),
            pt("q1", PointKind::Interior),
            pt("q2", PointKind::Interior),
        ],
        boundary: vec![vec!["m".into()]],
        arcs: vec![arc("A", "m", "p"), arc("B", "m", "p"), arc("C", "m", "p")],
        ribbon,
        enclosures: vec![
            Enclosure {
                point: "q1".into(),
                arc: "A".into(),
                side: Side::Left,
            },
            Enclosure {
                point: "q2".into(),
                arc: "C".into(),
                side: Side::Left,
            },
        ],
    }
}

/// Disk with two boundary points and an interior point p on the path between
/// them: the smallest dissection whose laminate must enclose a puncture.
pub fn disk_through_point() -> Dissection {
    let mut ribbon = BTreeMap::new();
    ribbon.insert("m1".to_string(), vec![end("A", WhichEnd::From)]);
    ribbon.insert("m2".to_string(), vec![end("B", WhichEnd::To)]);
    ribbon.insert(
        "p".to_string(),
        vec![end("A", WhichEnd::To), end("B", WhichEnd::From)],
    );
    Dissection {
        points: vec![
            pt("m1", PointKind::Boundary),
            pt("m2", PointKind::Boundary),
            pt("p", PointKind::Interior),
        ],
        boundary: vec![vec!["m1".into(), "m2".into()]],
        arcs: vec![arc("A", "m1", "p"), arc("B", "p", "m2")],
        ribbon,
        enclosures: vec![],
    }
}

/// Reverses one arc's orientation in place, swapping its endpoints and every
/// ribbon reference to its ends.
pub fn flip_arc(d: &mut Dissection, arc_id: &str) {
    let a = d
        .arcs
        .iter_mut()
        .find(|a| a.id == arc_id)
        .expect("fixture arc exists");
    std::mem::swap(&mut a.from, &mut a.to);
    for ends in d.ribbon.values_mut() {
        for e in ends.iter_mut() {
            if e.arc == arc_id {
                e.which = match e.which {
                    WhichEnd::From => WhichEnd::To,
                    WhichEnd::To => WhichEnd::From,
                };
            }
        }
    }
    // Reversing the arc relabels its sides, so handles into the adjacent
    // faces must swap to keep denoting the same face.
    for enc in d.enclosures.iter_mut() {
        if enc.arc == arc_id {
            enc.side = match enc.side {
                Side::Left => Side::Right,
                Side::Right => Side::Left,
            };
        }
    }
}

/// Kronecker quiver of the annulus dissection under the orientation grading.
pub fn annulus_quiver() -> FanQuiver {
    FanQuiver::from_dissection(&annulus(), &GradingSpec::mod2_orientation())
        .expect("annulus fixture is valid")
}

/// A3 quiver with the long path nonzero: arrows a: A→B, b: B→C in one fan,
/// so ba survives. Z/2-graded.
pub fn chain_quiver() -> FanQuiver {
    FanQuiver::from_parts(
        GradingGroup::Zmod2,
        vec!["A".into(), "B".into(), "C".into()],
        vec![
            ("a".into(), "A".into(), "B".into(), 0),
            ("b".into(), "B".into(), "C".into(), 0),
        ],
        vec![(false, vec!["a".into(), "b".into()])],
    )
    .expect("chain quiver data is consistent")
}

fn pants_parts() -> (
    Vec<String>,
    Vec<(String, String, String, i64)>,
    Vec<(bool, Vec<String>)>,
) {
    (
        vec![
            "A".into(),
            "B".into(),
            "C".into(),
            "D".into(),
            "L".into(),
            "M".into(),
            "R".into(),
        ],
        vec![
            ("a".into(), "A".into(), "L".into(), 0),
            ("b".into(), "L".into(), "M".into(), 0),
            ("c".into(), "M".into(), "B".into(), 0),
            ("d".into(), "A".into(), "B".into(), 0),
            ("e".into(), "C".into(), "M".into(), 0),
            ("f".into(), "M".into(), "R".into(), 0),
            ("g".into(), "R".into(), "D".into(), 0),
            ("h".into(), "C".into(), "D".into(), 0),
        ],
        vec![
            (false, vec!["a".into(), "b".into(), "c".into()]),
            (false, vec!["e".into(), "f".into(), "g".into()]),
        ],
    )
}

/// Two long fans a,b,c and e,f,g plus shortcut arrows d: A→B and h: C→D;
/// the nonzero composites are exactly ba, cb, cba, fe, gf, gfe. Z-graded.
pub fn pants_quiver() -> FanQuiver {
    let (vs, arrows, runs) = pants_parts();
    FanQuiver::from_parts(GradingGroup::Z, vs, arrows, runs)
        .expect("pants quiver data is consistent")
}

/// Same quiver as [`pants_quiver`] but Z/2-graded.
pub fn pants_quiver_z2() -> FanQuiver {
    let (vs, arrows, runs) = pants_parts();
    FanQuiver::from_parts(GradingGroup::Zmod2, vs, arrows, runs)
        .expect("pants quiver data is consistent")
}
