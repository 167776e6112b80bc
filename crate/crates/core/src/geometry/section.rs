use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::point::{signed_area, Point};

/// Material filling a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Material {
    Metal,
    Substrate,
    OxideTop,
    OxideSide,
    Vacuum,
}

impl Material {
    pub const ALL: [Material; 5] = [Material::Metal, Material::Substrate, Material::OxideTop, Material::OxideSide, Material::Vacuum];

    pub fn tag(self) -> &'static str {
        match self {
            Material::Metal => "metal",
            Material::Substrate => "substrate",
            Material::OxideTop => "oxide_top",
            Material::OxideSide => "oxide_side",
            Material::Vacuum => "vacuum",
        }
    }

    pub fn is_oxide(self) -> bool {
        matches!(self, Material::OxideTop | Material::OxideSide)
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Material {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Material::ALL.into_iter().find(|m| m.tag() == s).ok_or_else(|| format!("unknown material `{s}`"))
    }
}

/// Boundary condition carried by an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    ElectrodePad,
    ElectrodeGround,
    Outer,
}

impl BoundaryTag {
    pub fn tag(self) -> &'static str {
        match self {
            BoundaryTag::ElectrodePad => "electrode_pad",
            BoundaryTag::ElectrodeGround => "electrode_ground",
            BoundaryTag::Outer => "outer",
        }
    }

    pub fn is_electrode(self) -> bool {
        !matches!(self, BoundaryTag::Outer)
    }

    /// The other electrode; `Outer` maps to itself.
    pub fn swapped(self) -> Self {
        match self {
            BoundaryTag::ElectrodePad => BoundaryTag::ElectrodeGround,
            BoundaryTag::ElectrodeGround => BoundaryTag::ElectrodePad,
            BoundaryTag::Outer => BoundaryTag::Outer,
        }
    }
}

/// One material-tagged polygon, counter-clockwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub material: Material,
    pub polygon: Vec<Point>,
    /// Relative permittivity (unused for metal).
    pub eps_r: f64,
    /// Electrode a metal region belongs to.
    pub electrode: Option<BoundaryTag>,
}

impl Region {
    pub fn area(&self) -> f64 {
        signed_area(&self.polygon)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedSegment {
    pub a: Point,
    pub b: Point,
    pub tag: BoundaryTag,
}

/// A corner of interest with the angle it opens into the surrounding
/// medium: 270° for a square metal edge, 180° for a flat face.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerMarker {
    pub point: Point,
    pub exterior_angle: f64,
}

/// Paired inner (on the metal) and outer points across a thin layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub inner: Point,
    pub outer: Point,
}

/// A thin layer described by ordered stations. Consecutive inner points may
/// coincide, which fans the layer around a sharp corner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerStrip {
    pub region: usize,
    pub stations: Vec<Station>,
}

impl LayerStrip {
    /// Thinnest station-to-station crossing.
    pub fn min_thickness(&self) -> f64 {
        self.stations.iter().map(|s| s.inner.dist(s.outer)).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Top,
    Side,
}

/// A metal surface polyline with the metal on its right-hand side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetalSurface {
    pub electrode: BoundaryTag,
    pub kind: SurfaceKind,
    pub points: Vec<Point>,
}

/// Material-tagged polygons that tile a bounding box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub regions: Vec<Region>,
    pub boundary_tags: Vec<TaggedSegment>,
    pub corner_markers: Vec<CornerMarker>,
    pub layers: Vec<LayerStrip>,
    pub surfaces: Vec<MetalSurface>,
    /// Lower-left and upper-right corners of the box.
    pub bbox: [Point; 2],
}

impl CrossSection {
    pub fn box_area(&self) -> f64 {
        let [lo, hi] = self.bbox;
        (hi.x - lo.x) * (hi.y - lo.y)
    }

    pub fn regions_of(&self, m: Material) -> impl Iterator<Item = &Region> {
        self.regions.iter().filter(move |r| r.material == m)
    }

    /// Total area of one material.
    pub fn material_area(&self, m: Material) -> f64 {
        self.regions_of(m).map(Region::area).sum()
    }

    /// Every vertex of every region.
    pub fn vertices(&self) -> impl Iterator<Item = Point> + '_ {
        self.regions.iter().flat_map(|r| r.polygon.iter().copied())
    }

    /// Reflection through x = 0. Orientation is restored and electrode
    /// roles swap, so the result is again a valid cross-section.
    pub fn mirrored(&self) -> CrossSection {
        let flip = |pts: &[Point]| pts.iter().rev().map(|p| p.mirror()).collect::<Vec<_>>();
        CrossSection {
            regions: self
                .regions
                .iter()
                .map(|r| Region { polygon: flip(&r.polygon), electrode: r.electrode.map(BoundaryTag::swapped), ..r.clone() })
                .collect(),
            boundary_tags: self
                .boundary_tags
                .iter()
                .map(|s| TaggedSegment { a: s.b.mirror(), b: s.a.mirror(), tag: s.tag.swapped() })
                .collect(),
            corner_markers: self.corner_markers.iter().map(|c| CornerMarker { point: c.point.mirror(), ..*c }).collect(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerStrip {
                    region: l.region,
                    stations: l.stations.iter().map(|s| Station { inner: s.inner.mirror(), outer: s.outer.mirror() }).collect(),
                })
                .collect(),
            surfaces: self
                .surfaces
                .iter()
                .map(|s| MetalSurface { electrode: s.electrode.swapped(), kind: s.kind, points: flip(&s.points) })
                .collect(),
            bbox: [Point::new(-self.bbox[1].x, self.bbox[0].y), Point::new(-self.bbox[0].x, self.bbox[1].y)],
        }
    }

    /// ASCII polygon file: one block per region, a `material <tag>` header
    /// followed by `x y` lines in nm, blocks separated by a blank line.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        for (i, r) in self.regions.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "material {}", r.material);
            for p in &r.polygon {
                let _ = writeln!(out, "{} {}", p.x, p.y);
            }
        }
        out
    }

    /// Parses [`CrossSection::to_ascii`] output back into bare regions.
    pub fn regions_from_ascii(text: &str) -> Result<Vec<(Material, Vec<Point>)>, String> {
        let mut blocks = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(tag) = line.strip_prefix("material ") {
                blocks.push((tag.trim().parse::<Material>()?, Vec::new()));
                continue;
            }
            let (_, pts) = blocks.last_mut().ok_or_else(|| format!("line {}: vertex before any header", ln + 1))?;
            let mut it = line.split_whitespace().map(str::parse::<f64>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => pts.push(Point::new(x, y)),
                _ => return Err(format!("line {}: expected `x y`", ln + 1)),
            }
        }
        Ok(blocks)
    }
}
