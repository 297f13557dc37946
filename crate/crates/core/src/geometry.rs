//! Mesh-independent geometric meta data of one part.
//!
//! For each shell or membrane element the surface is the diagonal cross
//! product `S = 1/2 |(C - A) x (D - B)|` (triangles use the two edge
//! vectors), its mass is `S * d * rho` from the part material, and the mass
//! is lumped at the corner average. Part-level descriptors follow from that
//! point-mass system: total mass, centre of gravity, and the inertia tensor
//! about the cog. Sides shared by two elements are feature edges when the
//! angle between the element normals, `alpha = 2 asin(|n2 - n1| / 2)`,
//! exceeds a threshold; sides with one incident element are margins; sides
//! with three or more are branching lines. Everything except the bounding
//! box and the raw inertia components is invariant under rigid motion, and
//! all descriptors are insensitive to remeshing.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::deck::{Element, ElementKind, Node};
use crate::disasm::{checksum, ContentDigest, PartMesh};

/// Default feature-edge angle threshold in degrees.
pub const DEFAULT_ANGLE_THRESHOLD_DEG: f64 = 20.0;

/// Unordered pair of node ids bounding one element side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SideKey(u64, u64);

impl SideKey {
    /// Builds the key with the smaller id first. `a` and `b` must differ.
    pub fn new(a: u64, b: u64) -> Self {
        debug_assert_ne!(a, b, "element side must join two distinct nodes");
        if a < b {
            SideKey(a, b)
        } else {
            SideKey(b, a)
        }
    }

    pub fn nodes(&self) -> (u64, u64) {
        (self.0, self.1)
    }
}

/// Class of one element side by incidence and fold angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SideClass {
    /// Two incident elements meeting below the angle threshold.
    Interior,
    /// Two incident elements folding above the angle threshold.
    FeatureEdge,
    /// Exactly one incident element: free boundary of the structure.
    Margin,
    /// Three or more incident elements: a T-junction.
    Branching,
}

/// Incidence count and class per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SideInfo {
    pub incidence: usize,
    pub class: SideClass,
}

/// Classification of every surface-element side of a part.
#[derive(Debug, Clone, Default)]
pub struct SideClassification {
    pub sides: BTreeMap<SideKey, SideInfo>,
}

impl SideClassification {
    /// Total incidence over all sides; equals the sum of per-element side
    /// counts.
    pub fn total_incidence(&self) -> usize {
        self.sides.values().map(|s| s.incidence).sum()
    }
}

/// Symmetric inertia tensor about the centre of gravity, global axes.
/// Off-diagonal entries are tensor components (negated products of
/// inertia), so the matrix is positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct InertiaTensor {
    pub ixx: f64,
    pub iyy: f64,
    pub izz: f64,
    pub ixy: f64,
    pub ixz: f64,
    pub iyz: f64,
}

impl InertiaTensor {
    pub fn to_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.ixx, self.ixy, self.ixz, self.ixy, self.iyy, self.iyz, self.ixz, self.iyz,
            self.izz,
        )
    }

    /// Eigenvalues of the tensor, ascending.
    pub fn principal_moments(&self) -> [f64; 3] {
        let eigen = self.to_matrix().symmetric_eigen();
        let mut vals = [
            eigen.eigenvalues[0],
            eigen.eigenvalues[1],
            eigen.eigenvalues[2],
        ];
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals
    }
}

/// The mesh-independent descriptor vector of one part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartMetadata {
    pub part_id: u64,
    pub source_model: String,
    pub digest: ContentDigest,
    /// Total surface in mm^2.
    pub surface: f64,
    /// Total mass (surface x thickness x density summed over elements).
    pub mass: f64,
    /// Centre of gravity in mm.
    pub cog: [f64; 3],
    pub inertia: InertiaTensor,
    /// Principal moments of `inertia`, ascending.
    pub principal: [f64; 3],
    /// Summed length of feature-edge sides in mm.
    pub edge_length: f64,
    /// Summed length of free-boundary sides in mm.
    pub margin_length: f64,
    /// Summed length of sides with three or more incident elements in mm.
    pub branching_length: f64,
    /// Axis-aligned bounding box extents (dx, dy, dz) in mm.
    pub bbox: [f64; 3],
}

/// [`compute_metadata`] result: the descriptor plus how many non-surface
/// elements were excluded from it.
#[derive(Debug, Clone)]
pub struct MetadataOutcome {
    pub metadata: PartMetadata,
    /// Solid/beam/bar elements present in the part but outside the
    /// surface-based meta data model.
    pub excluded_elements: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("element {element_id}: kind {kind} carries no surface")]
    UnsupportedKind { element_id: u64, kind: ElementKind },
    #[error("element {element_id} is degenerate: {reason}")]
    DegenerateElement { element_id: u64, reason: String },
    #[error("normal vector input is not unit length (|n| = {norm})")]
    NonUnitNormal { norm: f64 },
    #[error("angle threshold {value} outside (0, 180)")]
    BadThreshold { value: f64 },
    #[error("part {part_id} has no shell or membrane elements")]
    NoSurfaceElements { part_id: u64 },
    #[error("part {part_id} has surface elements but no material")]
    MissingMaterial { part_id: u64 },
    #[error("part {part_id} has zero total mass (all elements degenerate)")]
    ZeroMass { part_id: u64 },
    #[error("element {element_id} references missing node {node_id}")]
    MissingNode { element_id: u64, node_id: u64 },
}

fn corner(
    elem: &Element,
    nodes: &BTreeMap<u64, Node>,
    idx: usize,
) -> Result<Vector3<f64>, GeometryError> {
    let nid = elem.node_ids[idx];
    let node = nodes.get(&nid).ok_or(GeometryError::MissingNode {
        element_id: elem.id,
        node_id: nid,
    })?;
    Ok(Vector3::new(node.x, node.y, node.z))
}

fn corners(
    elem: &Element,
    nodes: &BTreeMap<u64, Node>,
) -> Result<Vec<Vector3<f64>>, GeometryError> {
    (0..elem.node_ids.len())
        .map(|i| corner(elem, nodes, i))
        .collect()
}

/// Cross product of the two spanning vectors: diagonals `(C-A, D-B)` for
/// quads, edges `(B-A, C-A)` for triangles.
fn spanning_cross(
    elem: &Element,
    nodes: &BTreeMap<u64, Node>,
) -> Result<Vector3<f64>, GeometryError> {
    let c = corners(elem, nodes)?;
    match elem.kind {
        ElementKind::Shell4 | ElementKind::Membrane4 => Ok((c[2] - c[0]).cross(&(c[3] - c[1]))),
        ElementKind::Shell3 => Ok((c[1] - c[0]).cross(&(c[2] - c[0]))),
        kind => Err(GeometryError::UnsupportedKind {
            element_id: elem.id,
            kind,
        }),
    }
}

/// Surface of one shell or membrane element in mm^2.
///
/// Quads use half the norm of the diagonal cross product, which equals the
/// exact area for planar quads and remains well defined for warped ones;
/// triangles use half the edge cross product.
pub fn element_area(elem: &Element, nodes: &BTreeMap<u64, Node>) -> Result<f64, GeometryError> {
    Ok(0.5 * spanning_cross(elem, nodes)?.norm())
}

/// Unit normal of one surface element, right-handed in the node ordering.
pub fn element_normal(
    elem: &Element,
    nodes: &BTreeMap<u64, Node>,
) -> Result<Vector3<f64>, GeometryError> {
    let cross = spanning_cross(elem, nodes)?;
    let norm = cross.norm();
    if norm <= f64::MIN_POSITIVE.sqrt() {
        return Err(GeometryError::DegenerateElement {
            element_id: elem.id,
            reason: "spanning vectors are parallel or zero".to_string(),
        });
    }
    Ok(cross / norm)
}

/// Angle between two unit normals in degrees, `2 asin(|n2 - n1| / 2)`.
///
/// Symmetric in its arguments and confined to [0, 180]. Inputs more than
/// 1e-6 away from unit length are rejected.
pub fn dihedral_angle(n1: &Vector3<f64>, n2: &Vector3<f64>) -> Result<f64, GeometryError> {
    for n in [n1, n2] {
        let norm = n.norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(GeometryError::NonUnitNormal { norm });
        }
    }
    let half_chord = ((n2 - n1).norm() / 2.0).min(1.0);
    Ok(2.0 * half_chord.asin().to_degrees())
}

fn element_sides(elem: &Element) -> Vec<SideKey> {
    let ids = &elem.node_ids;
    match elem.kind {
        ElementKind::Shell4 | ElementKind::Membrane4 => vec![
            SideKey::new(ids[0], ids[1]),
            SideKey::new(ids[1], ids[2]),
            SideKey::new(ids[2], ids[3]),
            SideKey::new(ids[3], ids[0]),
        ],
        ElementKind::Shell3 => vec![
            SideKey::new(ids[0], ids[1]),
            SideKey::new(ids[1], ids[2]),
            SideKey::new(ids[2], ids[0]),
        ],
        _ => Vec::new(),
    }
}

/// Classifies every surface-element side of the part.
///
/// Incidence 1 is a margin, incidence >= 3 a branching line; sides shared
/// by exactly two elements are feature edges when the normals fold by more
/// than `angle_threshold_deg`, interior otherwise. Sides whose incident
/// elements are too degenerate for a normal count as interior.
pub fn classify_sides(
    part: &PartMesh,
    angle_threshold_deg: f64,
) -> Result<SideClassification, GeometryError> {
    if !(angle_threshold_deg > 0.0 && angle_threshold_deg < 180.0) {
        return Err(GeometryError::BadThreshold {
            value: angle_threshold_deg,
        });
    }
    let mut incident: BTreeMap<SideKey, Vec<u64>> = BTreeMap::new();
    for elem in part.elements.values() {
        for side in element_sides(elem) {
            incident.entry(side).or_default().push(elem.id);
        }
    }
    let mut sides = BTreeMap::new();
    for (key, elems) in incident {
        let class = match elems.len() {
            1 => SideClass::Margin,
            2 => {
                let n1 = element_normal(&part.elements[&elems[0]], &part.nodes);
                let n2 = element_normal(&part.elements[&elems[1]], &part.nodes);
                match (n1, n2) {
                    (Ok(n1), Ok(n2)) => {
                        if dihedral_angle(&n1, &n2)? > angle_threshold_deg {
                            SideClass::FeatureEdge
                        } else {
                            SideClass::Interior
                        }
                    }
                    _ => SideClass::Interior,
                }
            }
            _ => SideClass::Branching,
        };
        sides.insert(
            key,
            SideInfo {
                incidence: elems.len(),
                class,
            },
        );
    }
    Ok(SideClassification { sides })
}

/// Computes the full descriptor vector of one part.
///
/// Requires at least one shell or membrane element and a material; solid,
/// beam, and bar elements are excluded from all descriptors and counted in
/// the outcome. The bounding box spans every node of the part.
pub fn compute_metadata(
    part: &PartMesh,
    angle_threshold_deg: f64,
) -> Result<MetadataOutcome, GeometryError> {
    if !part.has_surface_elements() {
        return Err(GeometryError::NoSurfaceElements {
            part_id: part.part_id,
        });
    }
    let material = part.material.ok_or(GeometryError::MissingMaterial {
        part_id: part.part_id,
    })?;

    let mut surface = 0.0;
    let mut mass = 0.0;
    let mut weighted_centroid = Vector3::zeros();
    let mut point_masses: Vec<(f64, Vector3<f64>)> = Vec::new();
    let mut excluded = 0usize;

    for elem in part.elements.values() {
        if !elem.kind.is_surface() {
            excluded += 1;
            continue;
        }
        let area = element_area(elem, &part.nodes)?;
        let m = area * material.thickness * material.density;
        let pts = corners(elem, &part.nodes)?;
        let centroid = pts.iter().sum::<Vector3<f64>>() / pts.len() as f64;
        surface += area;
        mass += m;
        weighted_centroid += m * centroid;
        point_masses.push((m, centroid));
    }
    if mass <= 0.0 {
        return Err(GeometryError::ZeroMass {
            part_id: part.part_id,
        });
    }
    let cog = weighted_centroid / mass;

    let mut inertia = InertiaTensor::default();
    for (m, c) in &point_masses {
        let r = c - cog;
        inertia.ixx += m * (r.y * r.y + r.z * r.z);
        inertia.iyy += m * (r.x * r.x + r.z * r.z);
        inertia.izz += m * (r.x * r.x + r.y * r.y);
        inertia.ixy -= m * r.x * r.y;
        inertia.ixz -= m * r.x * r.z;
        inertia.iyz -= m * r.y * r.z;
    }
    let principal = inertia.principal_moments();

    let classification = classify_sides(part, angle_threshold_deg)?;
    let mut edge_length = 0.0;
    let mut margin_length = 0.0;
    let mut branching_length = 0.0;
    for (key, info) in &classification.sides {
        let (a, b) = key.nodes();
        let (na, nb) = (&part.nodes[&a], &part.nodes[&b]);
        let len = (Vector3::new(na.x, na.y, na.z) - Vector3::new(nb.x, nb.y, nb.z)).norm();
        match info.class {
            SideClass::FeatureEdge => edge_length += len,
            SideClass::Margin => margin_length += len,
            SideClass::Branching => branching_length += len,
            SideClass::Interior => {}
        }
    }

    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    for node in part.nodes.values() {
        for (i, v) in node.coords().iter().enumerate() {
            min[i] = min[i].min(*v);
            max[i] = max[i].max(*v);
        }
    }
    let bbox = [max[0] - min[0], max[1] - min[1], max[2] - min[2]];

    Ok(MetadataOutcome {
        metadata: PartMetadata {
            part_id: part.part_id,
            source_model: part.source_model.clone(),
            digest: checksum(part),
            surface,
            mass,
            cog: [cog.x, cog.y, cog.z],
            inertia,
            principal,
            edge_length,
            margin_length,
            branching_length,
            bbox,
        },
        excluded_elements: excluded,
    })
}
