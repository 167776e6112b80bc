use serde::{Deserialize, Serialize};

use super::GeometryError;

/// The sidewall, trench and oxide parameter vector of one pad edge.
///
/// Lengths are in nanometres except `gap` and `pad_extent`, which are in
/// micrometres; angles are in degrees. Every field has a default, so a JSON
/// object only needs the keys it changes, and unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryParams {
    /// Footer angle from vertical; 0 is a perpendicular sidewall.
    pub alpha: f64,
    /// Surface-oxide thickness on the top and the sidewall.
    pub dh: f64,
    /// Top-oxide thickness, overriding `dh`.
    pub dh_top: Option<f64>,
    /// Sidewall-oxide thickness, overriding `dh`.
    pub dh_side: Option<f64>,
    /// Rounding radius of the top edge.
    pub r1: f64,
    /// Rounding radius of the bottom edge (a concave fillet into the foot).
    pub r2: f64,
    pub trench_depth: f64,
    /// Lateral substrate removal under the film.
    pub undercut_x: f64,
    /// Undercut wall angle from horizontal.
    pub undercut_beta: f64,
    pub film_thickness: f64,
    /// Width of the oxidised top strip next to the edge when `capped`.
    pub exposed_length: f64,
    /// The top surface is capped except for `exposed_length`.
    pub capped: bool,
    /// Pad-to-ground gap, µm.
    pub gap: f64,
    pub eps_substrate: f64,
    pub eps_oxide: f64,
    /// Side of the square computational box, in units of `gap`.
    pub domain_scale: f64,
    /// Lateral extent of each electrode, µm.
    pub pad_extent: f64,
    /// Height of the footer as a fraction of the film thickness; the film
    /// above it is vertical.
    pub footer_fraction: f64,
    /// Thickness of an optional substrate–air layer, used only by the
    /// thin-layer estimate.
    pub sa_thickness: f64,
    pub eps_sa: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        GeometryParams {
            alpha: 0.0,
            dh: 5.0,
            dh_top: None,
            dh_side: None,
            r1: 0.0,
            r2: 0.0,
            trench_depth: 0.0,
            undercut_x: 0.0,
            undercut_beta: 90.0,
            film_thickness: 160.0,
            exposed_length: 0.0,
            capped: false,
            gap: 30.0,
            eps_substrate: 11.45,
            eps_oxide: 10.0,
            domain_scale: 6.0,
            pad_extent: 60.0,
            footer_fraction: 0.3,
            sa_thickness: 0.0,
            eps_sa: 10.0,
        }
    }
}

/// Permittivity commonly used for c-plane sapphire when anisotropy is ignored.
pub const EPS_SAPPHIRE: f64 = 10.2;
/// Permittivity of silicon at millikelvin temperatures.
pub const EPS_SILICON: f64 = 11.45;

/// Names accepted by [`GeometryParams::get`] and [`GeometryParams::set`].
pub const NUMERIC_FIELDS: &[&str] = &[
    "alpha",
    "dh",
    "dh_top",
    "dh_side",
    "r1",
    "r2",
    "trench_depth",
    "undercut_x",
    "undercut_beta",
    "film_thickness",
    "exposed_length",
    "gap",
    "eps_substrate",
    "eps_oxide",
    "domain_scale",
    "pad_extent",
    "footer_fraction",
    "sa_thickness",
    "eps_sa",
];

impl GeometryParams {
    pub fn top_oxide(&self) -> f64 {
        self.dh_top.unwrap_or(self.dh)
    }

    pub fn side_oxide(&self) -> f64 {
        self.dh_side.unwrap_or(self.dh)
    }

    /// Height of the knee between the vertical sidewall and the footer.
    pub fn footer_height(&self) -> f64 {
        self.footer_fraction * self.film_thickness
    }

    /// Numeric field by name.
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "alpha" => self.alpha,
            "dh" => self.dh,
            "dh_top" => self.top_oxide(),
            "dh_side" => self.side_oxide(),
            "r1" => self.r1,
            "r2" => self.r2,
            "trench_depth" => self.trench_depth,
            "undercut_x" => self.undercut_x,
            "undercut_beta" => self.undercut_beta,
            "film_thickness" => self.film_thickness,
            "exposed_length" => self.exposed_length,
            "gap" => self.gap,
            "eps_substrate" => self.eps_substrate,
            "eps_oxide" => self.eps_oxide,
            "domain_scale" => self.domain_scale,
            "pad_extent" => self.pad_extent,
            "footer_fraction" => self.footer_fraction,
            "sa_thickness" => self.sa_thickness,
            "eps_sa" => self.eps_sa,
            _ => return None,
        })
    }

    /// Copy with one numeric field replaced.
    pub fn with(&self, name: &str, value: f64) -> Result<Self, GeometryError> {
        let mut p = self.clone();
        p.set(name, value)?;
        Ok(p)
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), GeometryError> {
        match name {
            "alpha" => self.alpha = value,
            "dh" => self.dh = value,
            "dh_top" => self.dh_top = Some(value),
            "dh_side" => self.dh_side = Some(value),
            "r1" => self.r1 = value,
            "r2" => self.r2 = value,
            "trench_depth" => self.trench_depth = value,
            "undercut_x" => self.undercut_x = value,
            "undercut_beta" => self.undercut_beta = value,
            "film_thickness" => self.film_thickness = value,
            "exposed_length" => self.exposed_length = value,
            "gap" => self.gap = value,
            "eps_substrate" => self.eps_substrate = value,
            "eps_oxide" => self.eps_oxide = value,
            "domain_scale" => self.domain_scale = value,
            "pad_extent" => self.pad_extent = value,
            "footer_fraction" => self.footer_fraction = value,
            "sa_thickness" => self.sa_thickness = value,
            "eps_sa" => self.eps_sa = value,
            _ => return Err(GeometryError::UnknownField(name.to_string())),
        }
        Ok(())
    }

    /// Checks every invariant that can be decided without building polygons.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |field: &'static str, reason: String| Err(GeometryError::InvalidParams { field, reason });
        for &name in NUMERIC_FIELDS {
            let v = self.get(name).unwrap_or(0.0);
            if !v.is_finite() {
                return bad(field_name(name), format!("must be finite, got {v}"));
            }
            if v < 0.0 {
                return bad(field_name(name), format!("must be non-negative, got {v}"));
            }
        }
        if self.film_thickness <= 0.0 {
            return bad("film_thickness", "must be positive".into());
        }
        if self.gap <= 0.0 {
            return bad("gap", "must be positive".into());
        }
        if self.pad_extent <= 0.0 {
            return bad("pad_extent", "must be positive".into());
        }
        for (f, v) in [("eps_substrate", self.eps_substrate), ("eps_oxide", self.eps_oxide), ("eps_sa", self.eps_sa)] {
            if v < 1.0 {
                return bad(field_name(f), format!("relative permittivity must be >= 1, got {v}"));
            }
        }
        if self.alpha >= 90.0 {
            return bad("alpha", format!("must lie in [0, 90), got {}", self.alpha));
        }
        if self.undercut_x > 0.0 && !(self.undercut_beta > 0.0 && self.undercut_beta <= 90.0) {
            return bad("undercut_beta", format!("must lie in (0, 90] with an undercut, got {}", self.undercut_beta));
        }
        if !(self.footer_fraction > 0.0 && self.footer_fraction <= 1.0) {
            return bad("footer_fraction", format!("must lie in (0, 1], got {}", self.footer_fraction));
        }
        if self.domain_scale <= 0.0 {
            return bad("domain_scale", "must be positive".into());
        }
        if self.exposed_length > 0.5 * self.pad_extent * 1e3 {
            return bad(
                "exposed_length",
                format!("{} nm exceeds half the modelled pad ({} nm)", self.exposed_length, 0.5 * self.pad_extent * 1e3),
            );
        }

        let conflict = |first: &'static str, second: &'static str, detail: String| {
            Err(GeometryError::GeometryConflict { first, second, detail })
        };
        let t = self.film_thickness;
        let hf = self.footer_height();
        if self.r1 + self.r2 > t {
            return conflict("r1", "r2", format!("r1 + r2 = {} exceeds film_thickness {t}", self.r1 + self.r2));
        }
        if self.r1 > t - hf {
            return conflict("r1", "footer_fraction", format!("r1 = {} does not fit above the footer ({} nm)", self.r1, t - hf));
        }
        if self.r2 > 0.0 {
            let tangent = self.r2 * (45.0 - 0.5 * self.alpha).to_radians().tan();
            let footer_len = hf / self.alpha.to_radians().cos();
            if tangent > footer_len {
                return conflict("r2", "footer_fraction", format!("fillet tangent length {tangent:.3} nm exceeds the footer ({footer_len:.3} nm)"));
            }
            if self.r2 < 2.0 * self.side_oxide() {
                return conflict("r2", "dh_side", format!("a fillet of {} nm cannot carry a {} nm oxide; use 0 or >= twice the oxide", self.r2, self.side_oxide()));
            }
        }
        if self.undercut_x > 0.0 && self.trench_depth <= 0.0 {
            return conflict("undercut_x", "trench_depth", "an undercut needs a trench to open into".into());
        }
        if self.undercut_x >= self.pad_extent * 1e3 {
            return conflict("undercut_x", "pad_extent", format!("undercut {} nm reaches past the far end of the film", self.undercut_x));
        }
        if self.capped && self.exposed_length > 0.0 && self.exposed_length + self.r1 >= self.pad_extent * 1e3 {
            return conflict("exposed_length", "pad_extent", "exposed strip longer than the film".into());
        }
        // the foot, its fillet and the oxide on it must stay on this side of
        // the gap midline
        let reach = hf * self.alpha.to_radians().tan() + self.r2 + 2.0 * self.side_oxide();
        if reach >= 0.5 * self.gap * 1e3 {
            return conflict("alpha", "gap", format!("the foot reaches {reach:.1} nm, past the gap midline"));
        }
        let half_box = 0.5 * self.domain_scale * self.gap * 1e3;
        let pad_end = 0.5 * self.gap * 1e3 + self.pad_extent * 1e3;
        if pad_end >= half_box {
            return conflict("domain_scale", "pad_extent", format!("pad ends at {pad_end} nm, outside the {half_box} nm half-box"));
        }
        if self.trench_depth >= half_box || t + self.top_oxide().max(self.side_oxide()) >= half_box {
            return conflict("domain_scale", "trench_depth", "box too small for the film and trench".into());
        }
        Ok(())
    }
}

fn field_name(name: &str) -> &'static str {
    NUMERIC_FIELDS.iter().copied().find(|f| *f == name).unwrap_or("?")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        GeometryParams::default().validate().unwrap();
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let err = serde_json::from_str::<GeometryParams>(r#"{"alpha": 10, "trench_dept": 3}"#).unwrap_err();
        assert!(err.to_string().contains("trench_dept"));
        let p: GeometryParams = serde_json::from_str(r#"{"alpha": 10}"#).unwrap();
        assert_eq!(p.alpha, 10.0);
        assert_eq!(p.dh, 5.0);
    }

    #[test]
    fn radii_cannot_overlap() {
        let p = GeometryParams { r1: 100.0, r2: 70.0, ..Default::default() };
        assert!(matches!(p.validate(), Err(GeometryError::GeometryConflict { first: "r1", second: "r2", .. })));
    }

    #[test]
    fn undercut_needs_a_trench() {
        let p = GeometryParams { undercut_x: 60.0, ..Default::default() };
        assert!(matches!(p.validate(), Err(GeometryError::GeometryConflict { first: "undercut_x", .. })));
    }

    #[test]
    fn field_access_round_trips() {
        let mut p = GeometryParams::default();
        for (i, name) in NUMERIC_FIELDS.iter().enumerate() {
            p.set(name, i as f64 + 0.5).unwrap();
            assert_eq!(p.get(name), Some(i as f64 + 0.5));
        }
        assert!(p.set("nope", 1.0).is_err());
    }
}
