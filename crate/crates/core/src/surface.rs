use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Boundary,
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WhichEnd {
    From,
    To,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkedPoint {
    pub id: String,
    pub kind: PointKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arc {
    pub id: String,
    pub from: String,
    pub to: String,
}

/// One end of an arc, as it appears in a ribbon list: `["L", "from"]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(String, WhichEnd)", into = "(String, WhichEnd)")]
pub struct ArcEnd {
    pub arc: String,
    pub which: WhichEnd,
}

impl From<(String, WhichEnd)> for ArcEnd {
    fn from((arc, which): (String, WhichEnd)) -> Self {
        ArcEnd { arc, which }
    }
}

impl From<ArcEnd> for (String, WhichEnd) {
    fn from(e: ArcEnd) -> Self {
        (e.arc, e.which)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Enclosure {
    pub point: String,
    pub arc: String,
    pub side: Side,
}

/// A marked surface with a dissection: marked points, boundary circles
/// (stops are the implicit gaps between consecutive boundary points), arcs,
/// and the ribbon order of arc-ends at each point (linear at boundary points,
/// cyclic at interior points). Floating interior points are tied to the face
/// that encloses them via an (arc, side) handle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dissection {
    pub points: Vec<MarkedPoint>,
    #[serde(default)]
    pub boundary: Vec<Vec<String>>,
    #[serde(default)]
    pub arcs: Vec<Arc>,
    #[serde(default)]
    pub ribbon: BTreeMap<String, Vec<ArcEnd>>,
    #[serde(default)]
    pub enclosures: Vec<Enclosure>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(untagged)]
pub enum FaceItem {
    Side { arc: String, side: Side },
    Stop { from_point: String, to_point: String },
}

impl FaceItem {
    pub fn label(&self) -> String {
        match self {
            FaceItem::Side { arc, side } => {
                let s = match side {
                    Side::Left => "left",
                    Side::Right => "right",
                };
                format!("{arc}.{s}")
            }
            FaceItem::Stop {
                from_point,
                to_point,
            } => format!("stop({from_point}->{to_point})"),
        }
    }
}

/// One polygon of the dissection: its cyclic walk (arc sides and stops, in
/// corner-walk order, rotated to start at the smallest item) and the interior
/// point it encloses, if closed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Face {
    pub items: Vec<FaceItem>,
    pub enclosed: Option<String>,
}

impl Face {
    pub fn labels(&self) -> Vec<String> {
        self.items.iter().map(FaceItem::label).collect()
    }

    pub fn stop_count(&self) -> usize {
        self.items
            .iter()
            .filter(|i| matches!(i, FaceItem::Stop { .. }))
            .count()
    }

    pub fn arc_sides(&self) -> Vec<(String, Side)> {
        self.items
            .iter()
            .filter_map(|i| match i {
                FaceItem::Side { arc, side } => Some((arc.clone(), *side)),
                FaceItem::Stop { .. } => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SurfaceReport {
    pub genus: i64,
    pub boundary_count: usize,
    pub stops_per_boundary: Vec<usize>,
    pub puncture_count: usize,
    pub euler_characteristic: i64,
    pub faces: Vec<Face>,
}

/// One angle at a marked point: the corner swept from one arc-end to the next
/// in the ribbon order. Angles are the arrows of the fan quiver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Angle {
    pub id: String,
    pub point: String,
    pub index: usize,
    pub source: ArcEnd,
    pub target: ArcEnd,
    pub cyclic: bool,
}

// Interned view of a dissection used by the walk algorithms.
struct Index {
    kind: Vec<PointKind>,
    point_ids: Vec<String>,
    arc_ids: Vec<String>,
    ribbon: Vec<Vec<(usize, WhichEnd)>>,
    /// (point, ribbon position) of each arc end, indexed `[arc][From|To]`.
    end_pos: Vec<[(usize, usize); 2]>,
    /// (component, position) of each boundary point.
    comp_pos: Vec<Option<(usize, usize)>>,
    components: Vec<Vec<usize>>,
}

fn which_slot(w: WhichEnd) -> usize {
    match w {
        WhichEnd::From => 0,
        WhichEnd::To => 1,
    }
}

fn malformed(point: impl Into<String>, detail: impl Into<String>) -> Error {
    Error::MalformedRibbon {
        point: point.into(),
        detail: detail.into(),
    }
}

fn build_index(d: &Dissection) -> Result<Index> {
    let mut point_idx = BTreeMap::new();
    for (i, p) in d.points.iter().enumerate() {
        if point_idx.insert(p.id.as_str(), i).is_some() {
            return Err(malformed(&p.id, "duplicate point id"));
        }
    }
    let mut arc_idx = BTreeMap::new();
    for (i, a) in d.arcs.iter().enumerate() {
        if arc_idx.insert(a.id.as_str(), i).is_some() {
            return Err(malformed(&a.id, "duplicate arc id"));
        }
        for p in [&a.from, &a.to] {
            if !point_idx.contains_key(p.as_str()) {
                return Err(malformed(p, format!("arc `{}` references unknown point", a.id)));
            }
        }
    }

    let kind: Vec<PointKind> = d.points.iter().map(|p| p.kind).collect();
    let mut comp_pos = vec![None; d.points.len()];
    let mut components = Vec::new();
    for (c, comp) in d.boundary.iter().enumerate() {
        if comp.is_empty() {
            return Err(malformed("", "empty boundary component"));
        }
        let mut ids = Vec::new();
        for (j, pid) in comp.iter().enumerate() {
            let Some(&pi) = point_idx.get(pid.as_str()) else {
                return Err(malformed(pid, "boundary component references unknown point"));
            };
            if kind[pi] != PointKind::Boundary {
                return Err(malformed(pid, "interior point listed on a boundary component"));
            }
            if comp_pos[pi].is_some() {
                return Err(malformed(pid, "point listed twice on boundary components"));
            }
            comp_pos[pi] = Some((c, j));
            ids.push(pi);
        }
        components.push(ids);
    }
    for p in &d.points {
        if p.kind == PointKind::Boundary && comp_pos[point_idx[p.id.as_str()]].is_none() {
            return Err(malformed(&p.id, "boundary point not on any boundary component"));
        }
    }

    let mut ribbon = vec![Vec::new(); d.points.len()];
    let mut end_pos: Vec<[Option<(usize, usize)>; 2]> = vec![[None, None]; d.arcs.len()];
    for (pid, ends) in &d.ribbon {
        let Some(&pi) = point_idx.get(pid.as_str()) else {
            return Err(malformed(pid, "ribbon entry for unknown point"));
        };
        for (pos, e) in ends.iter().enumerate() {
            let Some(&ai) = arc_idx.get(e.arc.as_str()) else {
                return Err(malformed(pid, format!("ribbon references unknown arc `{}`", e.arc)));
            };
            let attached = match e.which {
                WhichEnd::From => &d.arcs[ai].from,
                WhichEnd::To => &d.arcs[ai].to,
            };
            if attached != pid {
                return Err(malformed(
                    pid,
                    format!("end `{}`.{:?} belongs at `{attached}`", e.arc, e.which),
                ));
            }
            if end_pos[ai][which_slot(e.which)].is_some() {
                return Err(malformed(pid, format!("end `{}`.{:?} listed twice", e.arc, e.which)));
            }
            end_pos[ai][which_slot(e.which)] = Some((pi, pos));
            ribbon[pi].push((ai, e.which));
        }
    }
    let mut resolved = Vec::with_capacity(d.arcs.len());
    for (ai, slots) in end_pos.iter().enumerate() {
        let a = &d.arcs[ai];
        let from = slots[0].ok_or_else(|| malformed(&a.from, format!("end `{}`.From missing from ribbon", a.id)))?;
        let to = slots[1].ok_or_else(|| malformed(&a.to, format!("end `{}`.To missing from ribbon", a.id)))?;
        resolved.push([from, to]);
    }

    let mut enclosed_seen = BTreeSet::new();
    for e in &d.enclosures {
        let Some(&pi) = point_idx.get(e.point.as_str()) else {
            return Err(malformed(&e.point, "enclosure references unknown point"));
        };
        if kind[pi] != PointKind::Interior {
            return Err(malformed(&e.point, "enclosed point is not interior"));
        }
        if !ribbon[pi].is_empty() {
            return Err(malformed(&e.point, "enclosed point has incident arcs"));
        }
        if !enclosed_seen.insert(pi) {
            return Err(malformed(&e.point, "point enclosed twice"));
        }
        if !arc_idx.contains_key(e.arc.as_str()) {
            return Err(malformed(&e.point, format!("enclosure references unknown arc `{}`", e.arc)));
        }
    }

    Ok(Index {
        kind,
        point_ids: d.points.iter().map(|p| p.id.clone()).collect(),
        arc_ids: d.arcs.iter().map(|a| a.id.clone()).collect(),
        ribbon,
        end_pos: resolved,
        comp_pos,
        components,
    })
}

// Walk states: about to consume an arc side (directed traversal with the face
// on the left: Left = forward, Right = backward) or a boundary stop gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Item {
    Side(usize, Side),
    Stop(usize, usize),
}

impl Index {
    fn exit_via(&self, arc: usize, which: WhichEnd) -> Item {
        match which {
            WhichEnd::From => Item::Side(arc, Side::Left),
            WhichEnd::To => Item::Side(arc, Side::Right),
        }
    }

    fn successor(&self, item: Item) -> Item {
        match item {
            Item::Side(arc, side) => {
                let far = match side {
                    Side::Left => WhichEnd::To,
                    Side::Right => WhichEnd::From,
                };
                let (p, i) = self.end_pos[arc][which_slot(far)];
                let k = self.ribbon[p].len();
                match self.kind[p] {
                    PointKind::Interior => {
                        let (a, w) = self.ribbon[p][(i + 1) % k];
                        self.exit_via(a, w)
                    }
                    PointKind::Boundary => {
                        if i + 1 < k {
                            let (a, w) = self.ribbon[p][i + 1];
                            self.exit_via(a, w)
                        } else {
                            let (c, j) = self.comp_pos[p].expect("boundary point has a component");
                            Item::Stop(c, j)
                        }
                    }
                }
            }
            Item::Stop(c, g) => {
                let comp = &self.components[c];
                let q = comp[(g + 1) % comp.len()];
                if self.ribbon[q].is_empty() {
                    Item::Stop(c, (g + 1) % comp.len())
                } else {
                    let (a, w) = self.ribbon[q][0];
                    self.exit_via(a, w)
                }
            }
        }
    }

    fn item_public(&self, item: Item) -> FaceItem {
        match item {
            Item::Side(a, s) => FaceItem::Side {
                arc: self.arc_ids[a].clone(),
                side: s,
            },
            Item::Stop(c, g) => {
                let comp = &self.components[c];
                FaceItem::Stop {
                    from_point: self.point_ids[comp[g]].clone(),
                    to_point: self.point_ids[comp[(g + 1) % comp.len()]].clone(),
                }
            }
        }
    }

    // Sort key: arc-sided items first (by arc id, then side), then stops.
    fn item_key(&self, item: Item) -> (u8, String, u8, usize, usize) {
        match item {
            Item::Side(a, s) => (0, self.arc_ids[a].clone(), s as u8, 0, 0),
            Item::Stop(c, g) => (1, String::new(), 0, c, g),
        }
    }
}

fn trace_indexed(ix: &Index) -> Result<Vec<Vec<Item>>> {
    let mut all = Vec::new();
    for a in 0..ix.arc_ids.len() {
        all.push(Item::Side(a, Side::Left));
        all.push(Item::Side(a, Side::Right));
    }
    for (c, comp) in ix.components.iter().enumerate() {
        for g in 0..comp.len() {
            all.push(Item::Stop(c, g));
        }
    }
    let mut visited = BTreeSet::new();
    let mut faces = Vec::new();
    for &start in &all {
        if visited.contains(&start) {
            continue;
        }
        let mut orbit = vec![start];
        visited.insert(start);
        let mut cur = ix.successor(start);
        while cur != start {
            if !visited.insert(cur) {
                let arc = match cur {
                    Item::Side(a, _) => ix.arc_ids[a].clone(),
                    Item::Stop(..) => String::new(),
                };
                return Err(Error::NonOrientableTrace { arc });
            }
            orbit.push(cur);
            cur = ix.successor(cur);
        }
        faces.push(orbit);
    }
    Ok(faces)
}

fn canonicalize(ix: &Index, mut faces: Vec<Vec<Item>>) -> Vec<Vec<Item>> {
    for face in &mut faces {
        let min = (0..face.len())
            .min_by_key(|&i| ix.item_key(face[i]))
            .expect("faces are nonempty");
        face.rotate_left(min);
    }
    faces.sort_by_key(|f| ix.item_key(f[0]));
    faces
}

impl Dissection {
    /// Corner-walk trace of all polygon faces; each arc side and each stop
    /// appears in exactly one face.
    pub fn trace_faces(&self) -> Result<Vec<Face>> {
        let ix = build_index(self)?;
        let faces = canonicalize(&ix, trace_indexed(&ix)?);
        let by_handle = self.enclosure_handles(&ix);
        Ok(faces
            .into_iter()
            .map(|orbit| {
                let enclosed = orbit
                    .iter()
                    .find_map(|it| by_handle.get(&ix.item_key(*it)).cloned());
                Face {
                    items: orbit.into_iter().map(|it| ix.item_public(it)).collect(),
                    enclosed,
                }
            })
            .collect())
    }

    fn enclosure_handles(&self, ix: &Index) -> BTreeMap<(u8, String, u8, usize, usize), String> {
        let mut m = BTreeMap::new();
        for e in &self.enclosures {
            let ai = ix.arc_ids.iter().position(|a| *a == e.arc).expect("checked");
            m.insert(ix.item_key(Item::Side(ai, e.side)), e.point.clone());
        }
        m
    }

    /// Full dissection validity: every face carries exactly one stop or
    /// encloses exactly one interior point, no two arcs are isotopic, and
    /// every floating puncture is enclosed. Returns the topological summary.
    pub fn validate(&self) -> Result<SurfaceReport> {
        let ix = build_index(self)?;
        let faces = self.trace_faces()?;

        let side_total: usize = faces.iter().map(|f| f.arc_sides().len()).sum();
        let stop_total: usize = faces.iter().map(Face::stop_count).sum();
        let expected_stops: usize = ix.components.iter().map(Vec::len).sum();
        if side_total != 2 * self.arcs.len() || stop_total != expected_stops {
            return Err(Error::NonOrientableTrace { arc: String::new() });
        }

        let mut enclosed_points: BTreeSet<&str> = BTreeSet::new();
        for face in &faces {
            let stops = face.stop_count();
            let mut encl: Vec<&str> = Vec::new();
            for e in &self.enclosures {
                let handle = FaceItem::Side {
                    arc: e.arc.clone(),
                    side: e.side,
                };
                if face.items.contains(&handle) {
                    encl.push(&e.point);
                }
            }
            encl.sort_unstable();
            match (stops, encl.len()) {
                (1, 0) => {}
                (0, 1) => {
                    enclosed_points.insert(encl[0]);
                }
                (0, 0) => {
                    let sides = face.arc_sides();
                    if sides.len() == 2 && sides[0].0 != sides[1].0 {
                        let (mut first, mut second) = (sides[0].0.clone(), sides[1].0.clone());
                        if second < first {
                            std::mem::swap(&mut first, &mut second);
                        }
                        return Err(Error::IsotopicArcs { first, second });
                    }
                    return Err(Error::FaceWithZeroStops { face: face.labels() });
                }
                (0, _) => {
                    return Err(Error::UnassignedPuncture {
                        point: encl[1].to_string(),
                    })
                }
                (1, _) => {
                    return Err(Error::UnassignedPuncture {
                        point: encl[0].to_string(),
                    })
                }
                (n, _) => {
                    return Err(Error::FaceWithManyStops {
                        face: face.labels(),
                        count: n,
                    })
                }
            }
        }
        for (pi, p) in self.points.iter().enumerate() {
            if p.kind == PointKind::Interior
                && ix.ribbon[pi].is_empty()
                && !enclosed_points.contains(p.id.as_str())
            {
                return Err(Error::UnassignedPuncture { point: p.id.clone() });
            }
        }

        let v = self
            .points
            .iter()
            .enumerate()
            .filter(|(pi, p)| p.kind == PointKind::Boundary || !ix.ribbon[*pi].is_empty())
            .count() as i64;
        let e = (self.arcs.len() + expected_stops) as i64;
        let f = faces.len() as i64;
        let chi = v - e + f;
        let b = ix.components.len() as i64;
        let genus = (2 - b - chi) / 2;
        Ok(SurfaceReport {
            genus,
            boundary_count: ix.components.len(),
            stops_per_boundary: ix.components.iter().map(Vec::len).collect(),
            puncture_count: self
                .points
                .iter()
                .filter(|p| p.kind == PointKind::Interior)
                .count(),
            euler_characteristic: chi,
            faces,
        })
    }

    /// All angles, grouped implicitly by marked point: consecutive ribbon
    /// pairs, linear at boundary points (k ends, k−1 angles) and cyclic at
    /// interior points (k angles). The arrow runs from the earlier to the
    /// later end in ribbon order; ids are `point:index`.
    pub fn enumerate_angles(&self) -> Result<Vec<Angle>> {
        let ix = build_index(self)?;
        let mut order: Vec<usize> = (0..self.points.len()).collect();
        order.sort_by(|&a, &b| ix.point_ids[a].cmp(&ix.point_ids[b]));
        let mut out = Vec::new();
        for pi in order {
            let ends = &ix.ribbon[pi];
            let k = ends.len();
            let cyclic = ix.kind[pi] == PointKind::Interior;
            let pairs = if cyclic { k } else { k.saturating_sub(1) };
            for i in 0..pairs {
                let (sa, sw) = ends[i];
                let (ta, tw) = ends[(i + 1) % k];
                out.push(Angle {
                    id: format!("{}:{}", ix.point_ids[pi], i),
                    point: ix.point_ids[pi].clone(),
                    index: i,
                    source: ArcEnd {
                        arc: ix.arc_ids[sa].clone(),
                        which: sw,
                    },
                    target: ArcEnd {
                        arc: ix.arc_ids[ta].clone(),
                        which: tw,
                    },
                    cyclic,
                });
            }
        }
        Ok(out)
    }

    /// The dual curve system: one dual point per stop, one dual arc per arc
    /// joining the stops of its two adjacent faces. Interior marked points
    /// survive as floating punctures enclosed by the dual's closed faces.
    /// Requires every face to be open.
    pub fn laminate(&self) -> Result<Dissection> {
        let report = self.validate()?;
        let ix = build_index(self)?;
        for face in &report.faces {
            if let Some(p) = &face.enclosed {
                return Err(Error::ClosedFacePresent { point: p.clone() });
            }
        }

        let dual_point_id = |from_point: &str, to_point: &str| format!("dual:{from_point}~{to_point}");
        // Stop of the face containing each arc side.
        let mut stop_of_side: BTreeMap<(String, Side), String> = BTreeMap::new();
        for face in &report.faces {
            let stop = face
                .items
                .iter()
                .find_map(|it| match it {
                    FaceItem::Stop {
                        from_point,
                        to_point,
                    } => Some(dual_point_id(from_point, to_point)),
                    FaceItem::Side { .. } => None,
                })
                .expect("every face is open here");
            for (arc, side) in face.arc_sides() {
                stop_of_side.insert((arc, side), stop.clone());
            }
        }

        let mut points = Vec::new();
        let mut boundary = Vec::new();
        for comp in &ix.components {
            let mut dual_comp = Vec::new();
            for g in 0..comp.len() {
                let id = dual_point_id(
                    &ix.point_ids[comp[g]],
                    &ix.point_ids[comp[(g + 1) % comp.len()]],
                );
                points.push(MarkedPoint {
                    id: id.clone(),
                    kind: PointKind::Boundary,
                });
                dual_comp.push(id);
            }
            boundary.push(dual_comp);
        }

        let arcs: Vec<Arc> = self
            .arcs
            .iter()
            .map(|a| Arc {
                id: format!("dual:{}", a.id),
                from: stop_of_side[&(a.id.clone(), Side::Left)].clone(),
                to: stop_of_side[&(a.id.clone(), Side::Right)].clone(),
            })
            .collect();

        // Ribbon at a dual point: the face's arc sides starting after its
        // stop, reversed; a left side contributes the dual arc's from-end.
        let mut ribbon: BTreeMap<String, Vec<ArcEnd>> = BTreeMap::new();
        for face in &report.faces {
            let stop_at = face
                .items
                .iter()
                .position(|it| matches!(it, FaceItem::Stop { .. }))
                .expect("every face is open here");
            let FaceItem::Stop {
                from_point,
                to_point,
            } = &face.items[stop_at]
            else {
                unreachable!()
            };
            let mut rotated = face.items.clone();
            rotated.rotate_left((stop_at + 1) % face.items.len());
            let mut ends: Vec<ArcEnd> = rotated
                .into_iter()
                .filter_map(|it| match it {
                    FaceItem::Side { arc, side } => Some(ArcEnd {
                        arc: format!("dual:{arc}"),
                        which: match side {
                            Side::Left => WhichEnd::From,
                            Side::Right => WhichEnd::To,
                        },
                    }),
                    FaceItem::Stop { .. } => None,
                })
                .collect();
            ends.reverse();
            ribbon.insert(dual_point_id(from_point, to_point), ends);
        }

        // Arc-incident interior points become floating punctures; the face of
        // the dual that encloses one is reached through any incident arc.
        let mut enclosures = Vec::new();
        for (pi, p) in self.points.iter().enumerate() {
            if p.kind != PointKind::Interior {
                continue;
            }
            let mut ends: Vec<(String, WhichEnd)> = ix.ribbon[pi]
                .iter()
                .map(|&(a, w)| (ix.arc_ids[a].clone(), w))
                .collect();
            ends.sort();
            let (arc, which) = ends.first().expect("no floating punctures here").clone();
            points.push(MarkedPoint {
                id: p.id.clone(),
                kind: PointKind::Interior,
            });
            enclosures.push(Enclosure {
                point: p.id.clone(),
                arc: format!("dual:{arc}"),
                side: match which {
                    WhichEnd::To => Side::Left,
                    WhichEnd::From => Side::Right,
                },
            });
        }

        Ok(Dissection {
            points,
            boundary,
            arcs,
            ribbon,
            enclosures,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn annulus_faces() {
        let d = fixtures::annulus();
        let faces = d.trace_faces().unwrap();
        assert_eq!(faces.len(), 2);
        let labels: Vec<Vec<String>> = faces.iter().map(Face::labels).collect();
        assert_eq!(
            labels[0],
            vec!["L.left", "R.right", "stop(m_out->m_out)"]
        );
        assert_eq!(labels[1], vec!["L.right", "R.left", "stop(m_in->m_in)"]);
        let rep = d.validate().unwrap();
        assert_eq!(rep.genus, 0);
        assert_eq!(rep.boundary_count, 2);
        assert_eq!(rep.stops_per_boundary, vec![1, 1]);
        assert_eq!(rep.euler_characteristic, 0);
    }

    #[test]
    fn disk4_faces() {
        let d = fixtures::disk(4);
        let faces = d.trace_faces().unwrap();
        let labels: Vec<Vec<String>> = faces.iter().map(Face::labels).collect();
        assert_eq!(
            labels,
            vec![
                vec!["B1.left", "B2.left", "B3.left", "stop(m4->m1)"],
                vec!["B1.right", "stop(m1->m2)"],
                vec!["B2.right", "stop(m2->m3)"],
                vec!["B3.right", "stop(m3->m4)"],
            ]
        );
        let rep = d.validate().unwrap();
        assert_eq!(rep.genus, 0);
        assert_eq!(rep.boundary_count, 1);
        assert_eq!(rep.stops_per_boundary, vec![4]);
        assert_eq!(rep.euler_characteristic, 1);
        assert_eq!(rep.puncture_count, 0);
    }

    #[test]
    fn punctured_disk_faces() {
        let d = fixtures::punctured_disk();
        let rep = d.validate().unwrap();
        assert_eq!(rep.genus, 0);
        assert_eq!(rep.boundary_count, 1);
        assert_eq!(rep.puncture_count, 3);
        assert_eq!(rep.euler_characteristic, 1);
        let closed: Vec<&str> = rep
            .faces
            .iter()
            .filter_map(|f| f.enclosed.as_deref())
            .collect();
        assert_eq!(closed, vec!["q1", "q2"]);
    }

    #[test]
    fn two_point_disk_without_arcs_has_two_stops_in_one_face() {
        let d = Dissection {
            points: vec![
                MarkedPoint {
                    id: "m1".into(),
                    kind: PointKind::Boundary,
                },
                MarkedPoint {
                    id: "m2".into(),
                    kind: PointKind::Boundary,
                },
            ],
            boundary: vec![vec!["m1".into(), "m2".into()]],
            arcs: vec![],
            ribbon: BTreeMap::new(),
            enclosures: vec![],
        };
        match d.validate() {
            Err(Error::FaceWithManyStops { count, .. }) => assert_eq!(count, 2),
            other => panic!("expected FaceWithManyStops, got {other:?}"),
        }
    }

    #[test]
    fn missing_end_is_malformed() {
        let mut d = fixtures::annulus();
        d.ribbon.get_mut("m_in").unwrap().pop();
        match d.trace_faces() {
            Err(Error::MalformedRibbon { .. }) => {}
            other => panic!("expected MalformedRibbon, got {other:?}"),
        }
    }

    #[test]
    fn duplicated_end_is_malformed() {
        let mut d = fixtures::annulus();
        let e = d.ribbon["m_out"][0].clone();
        d.ribbon.get_mut("m_out").unwrap().push(e);
        assert!(matches!(d.trace_faces(), Err(Error::MalformedRibbon { .. })));
    }

    #[test]
    fn isotopic_arcs_detected() {
        // Remove the puncture from one of the punctured disk's bigons.
        let mut d = fixtures::punctured_disk();
        d.points.retain(|p| p.id != "q1");
        d.enclosures.retain(|e| e.point != "q1");
        match d.validate() {
            Err(Error::IsotopicArcs { first, second }) => {
                assert_eq!((first.as_str(), second.as_str()), ("A", "B"));
            }
            other => panic!("expected IsotopicArcs, got {other:?}"),
        }
    }

    #[test]
    fn floating_point_without_enclosure_is_unassigned() {
        let mut d = fixtures::punctured_disk();
        d.points.push(MarkedPoint {
            id: "q3".into(),
            kind: PointKind::Interior,
        });
        match d.validate() {
            Err(Error::UnassignedPuncture { point }) => assert_eq!(point, "q3"),
            other => panic!("expected UnassignedPuncture, got {other:?}"),
        }
    }

    #[test]
    fn enclosure_in_open_face_is_unassigned() {
        let mut d = fixtures::punctured_disk();
        // A third puncture pointed at (B, left), which is an open face.
        d.points.push(MarkedPoint {
            id: "q3".into(),
            kind: PointKind::Interior,
        });
        d.enclosures.push(Enclosure {
            point: "q3".into(),
            arc: "B".into(),
            side: Side::Left,
        });
        match d.validate() {
            Err(Error::UnassignedPuncture { point }) => assert_eq!(point, "q3"),
            other => panic!("expected UnassignedPuncture, got {other:?}"),
        }
    }

    #[test]
    fn annulus_angles() {
        let d = fixtures::annulus();
        let angles = d.enumerate_angles().unwrap();
        assert_eq!(angles.len(), 2);
        // Sorted by point id: m_in first.
        assert_eq!(angles[0].id, "m_in:0");
        assert_eq!(angles[0].source.arc, "L");
        assert_eq!(angles[0].target.arc, "R");
        assert_eq!(angles[1].id, "m_out:0");
        assert_eq!(angles[1].source.arc, "L");
        assert_eq!(angles[1].target.arc, "R");
    }

    #[test]
    fn disk_angles_form_chain() {
        let d = fixtures::disk(5);
        let angles = d.enumerate_angles().unwrap();
        let heads: Vec<(String, String)> = angles
            .iter()
            .map(|a| (a.source.arc.clone(), a.target.arc.clone()))
            .collect();
        assert_eq!(
            heads,
            vec![
                ("B1".to_string(), "B2".to_string()),
                ("B2".to_string(), "B3".to_string()),
                ("B3".to_string(), "B4".to_string()),
            ]
        );
    }

    #[test]
    fn punctured_disk_angles() {
        let d = fixtures::punctured_disk();
        let angles = d.enumerate_angles().unwrap();
        let ids: Vec<&str> = angles.iter().map(|a| a.id.as_str()).collect();
        assert_eq!(ids, vec!["m:0", "m:1", "p:0", "p:1", "p:2"]);
        let at_p: Vec<(String, String)> = angles
            .iter()
            .filter(|a| a.point == "p")
            .map(|a| (a.source.arc.clone(), a.target.arc.clone()))
            .collect();
        assert_eq!(
            at_p,
            vec![
                ("A".to_string(), "B".to_string()),
                ("B".to_string(), "C".to_string()),
                ("C".to_string(), "A".to_string()),
            ]
        );
        assert!(angles.iter().filter(|a| a.point == "p").all(|a| a.cyclic));
        assert!(angles.iter().filter(|a| a.point == "m").all(|a| !a.cyclic));
    }

    #[test]
    fn disk4_laminate() {
        let d = fixtures::disk(4);
        let dual = d.laminate().unwrap();
        assert_eq!(dual.points.len(), 4);
        let b1 = dual.arcs.iter().find(|a| a.id == "dual:B1").unwrap();
        assert_eq!(b1.from, "dual:m4~m1");
        assert_eq!(b1.to, "dual:m1~m2");
        let b2 = dual.arcs.iter().find(|a| a.id == "dual:B2").unwrap();
        assert_eq!((b2.from.as_str(), b2.to.as_str()), ("dual:m4~m1", "dual:m2~m3"));
        let rep = dual.validate().unwrap();
        assert_eq!(rep.genus, 0);
        assert_eq!(rep.boundary_count, 1);
        assert_eq!(rep.faces.len(), 4);
    }

    #[test]
    fn annulus_laminate() {
        let dual = fixtures::annulus().laminate().unwrap();
        assert_eq!(dual.points.len(), 2);
        assert_eq!(dual.arcs.len(), 2);
        let rep = dual.validate().unwrap();
        assert_eq!(rep.genus, 0);
        assert_eq!(rep.boundary_count, 2);
        assert_eq!(rep.euler_characteristic, 0);
    }

    #[test]
    fn punctured_disk_laminate_refuses_closed_faces() {
        match fixtures::punctured_disk().laminate() {
            Err(Error::ClosedFacePresent { point }) => assert_eq!(point, "q1"),
            other => panic!("expected ClosedFacePresent, got {other:?}"),
        }
    }

    #[test]
    fn laminate_carries_interior_points_as_punctures() {
        let d = fixtures::disk_through_point();
        let rep = d.validate().unwrap();
        assert_eq!(rep.faces.len(), 2);
        assert_eq!(rep.puncture_count, 1);
        let dual = d.laminate().unwrap();
        let drep = dual.validate().unwrap();
        assert_eq!(drep.genus, rep.genus);
        assert_eq!(drep.boundary_count, rep.boundary_count);
        assert_eq!(drep.puncture_count, 1);
        let closed: Vec<&str> = drep
            .faces
            .iter()
            .filter_map(|f| f.enclosed.as_deref())
            .collect();
        assert_eq!(closed, vec!["p"]);
    }

    #[test]
    fn single_point_disk_has_one_stop_face() {
        let d = Dissection {
            points: vec![MarkedPoint {
                id: "m".into(),
                kind: PointKind::Boundary,
            }],
            boundary: vec![vec!["m".into()]],
            arcs: vec![],
            ribbon: BTreeMap::new(),
            enclosures: vec![],
        };
        let rep = d.validate().unwrap();
        assert_eq!(rep.faces.len(), 1);
        assert_eq!(rep.euler_characteristic, 1);
        assert_eq!(rep.genus, 0);
    }
}
