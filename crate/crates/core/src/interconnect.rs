//! Interconnect resistance model.
//!
//! Effective Cu resistivity is the bulk value scaled by a grain-boundary
//! (Mayadas-Shatzkes) factor and a surface (Fuchs-Sondheimer, thin-film
//! additive form) factor. The Cu core sits inside a Ta liner and a TaN
//! barrier that cover both sidewalls and the bottom of a tapered trench;
//! the three regions conduct in parallel.
//!
//! Lengths are in nm, resistivities in Ω·µm, line resistance in Ω/µm.

use serde::{Deserialize, Serialize};

use crate::cells::CellKind;
use crate::error::{Error, Result};

pub const DEFAULT_VIA_RESISTANCE: f64 = 78.0;
pub const DEFAULT_DRIVER_RESISTANCE: f64 = 100.0;
pub const DEFAULT_SINK_RESISTANCE: f64 = 100.0;
/// 8T-SRAM bit-cell height in µm; puts the default segment at ~20 Ω.
pub const DEFAULT_SRAM_CELL_HEIGHT_UM: f64 = 0.110;

const NM2_TO_UM2: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WireGeometry {
    /// Top (widest) width of the trench.
    pub width: f64,
    pub height: f64,
    /// Sidewall angle in degrees; 90 is a rectangle.
    pub taper_angle: f64,
    /// Ta liner, adjacent to the Cu.
    pub liner_thickness: f64,
    /// TaN barrier, adjacent to the dielectric.
    pub barrier_thickness: f64,
    pub pitch: f64,
}

impl Default for WireGeometry {
    /// M1-M3 class wire at the 7 nm node, aspect ratio 2.
    fn default() -> Self {
        Self {
            width: 18.0,
            height: 36.0,
            taper_angle: 87.0,
            liner_thickness: 1.0,
            barrier_thickness: 2.0,
            pitch: 36.0,
        }
    }
}

/// Areas (nm²) and Cu-core dimensions of a wire cross-section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSection {
    pub cu_area: f64,
    pub liner_area: f64,
    pub barrier_area: f64,
    /// Mean width of the Cu trapezoid.
    pub cu_width: f64,
    pub cu_height: f64,
}

fn trapezoid_area(top: f64, height: f64, cot: f64) -> f64 {
    let bottom = top - 2.0 * height * cot;
    0.5 * (top + bottom) * height
}

impl WireGeometry {
    pub fn validate(&self) -> Result<()> {
        let shell = self.liner_thickness + self.barrier_thickness;
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::invalid("wire width and height must be positive"));
        }
        if self.liner_thickness < 0.0 || self.barrier_thickness < 0.0 {
            return Err(Error::invalid("liner and barrier thickness must be non-negative"));
        }
        if self.width <= 2.0 * shell {
            return Err(Error::invalid(format!(
                "width {} nm leaves no Cu core inside {} nm of liner+barrier per side",
                self.width, shell
            )));
        }
        if !(self.taper_angle > 0.0 && self.taper_angle <= 90.0) {
            return Err(Error::invalid(format!(
                "taper angle {} outside (0, 90]",
                self.taper_angle
            )));
        }
        Ok(())
    }

    /// Every linear dimension multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            width: self.width * factor,
            height: self.height * factor,
            taper_angle: self.taper_angle,
            liner_thickness: self.liner_thickness * factor,
            barrier_thickness: self.barrier_thickness * factor,
            pitch: self.pitch * factor,
        }
    }

    /// Inner regions are inset copies of the outer trapezoid with the same
    /// sidewall angle, offset horizontally by the layer thickness and lifted
    /// by it at the bottom. The top surface is uncovered.
    pub fn cross_section(&self) -> Result<CrossSection> {
        self.validate()?;
        let cot = if self.taper_angle >= 90.0 {
            0.0
        } else {
            1.0 / self.taper_angle.to_radians().tan()
        };
        let shell = self.liner_thickness + self.barrier_thickness;
        let outer = trapezoid_area(self.width, self.height, cot);
        let inside_barrier = trapezoid_area(
            self.width - 2.0 * self.barrier_thickness,
            self.height - self.barrier_thickness,
            cot,
        );
        let cu_height = self.height - shell;
        let cu_top = self.width - 2.0 * shell;
        let cu_bottom = cu_top - 2.0 * cu_height * cot;
        if cu_height <= 0.0 || cu_bottom <= 0.0 {
            return Err(Error::invalid("Cu core area is not positive"));
        }
        let cu_area = trapezoid_area(cu_top, cu_height, cot);
        Ok(CrossSection {
            cu_area,
            liner_area: inside_barrier - cu_area,
            barrier_area: outer - inside_barrier,
            cu_width: cu_area / cu_height,
            cu_height,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatteringParams {
    pub rho_bulk: f64,
    /// Electron mean free path, nm.
    pub mean_free_path: f64,
    pub gb_reflection: f64,
    /// Fraction of surface-specular scattering (1 = no surface penalty).
    pub specularity: f64,
    /// Mean grain diameter, nm.
    pub grain_size: f64,
    pub rho_liner: f64,
    pub rho_barrier: f64,
}

impl Default for ScatteringParams {
    /// Cu at room temperature with Ta/TaN shells. Grain size is the mean
    /// Cu-core width of the default 7 nm wire.
    fn default() -> Self {
        let grain_size = WireGeometry::default()
            .cross_section()
            .map(|cs| cs.cu_width)
            .unwrap_or(12.0);
        Self {
            rho_bulk: 0.0172,
            mean_free_path: 40.0,
            gb_reflection: 0.135,
            specularity: 0.5,
            grain_size,
            rho_liner: 2.0,
            rho_barrier: 3.0,
        }
    }
}

impl ScatteringParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_bulk > 0.0 && self.mean_free_path >= 0.0 && self.grain_size > 0.0) {
            return Err(Error::invalid(
                "rho_bulk and grain_size must be positive, mean_free_path non-negative",
            ));
        }
        if !(0.0..=1.0).contains(&self.specularity) {
            return Err(Error::invalid("specularity must lie in [0, 1]"));
        }
        if !(self.rho_liner > 0.0 && self.rho_barrier > 0.0) {
            return Err(Error::invalid("liner and barrier resistivity must be positive"));
        }
        Ok(())
    }
}

/// Grain-boundary resistivity enhancement.
pub fn ms_factor(p: &ScatteringParams) -> Result<f64> {
    let r = p.gb_reflection;
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!(
            "grain-boundary reflection {r} outside [0, 1)"
        )));
    }
    if p.grain_size <= 0.0 {
        return Err(Error::Domain("grain size must be positive".into()));
    }
    let alpha = p.mean_free_path / p.grain_size * r / (1.0 - r);
    if alpha == 0.0 {
        return Ok(1.0);
    }
    let bracket =
        1.0 / 3.0 - alpha / 2.0 + alpha * alpha - alpha.powi(3) * (1.0 + 1.0 / alpha).ln();
    Ok(1.0 / (3.0 * bracket))
}

/// Surface-scattering enhancement for a Cu core of the given size (nm).
pub fn fs_factor(p: &ScatteringParams, cu_width: f64, cu_height: f64) -> Result<f64> {
    if !(cu_width > 0.0 && cu_height > 0.0) {
        return Err(Error::Domain("Cu width and height must be positive".into()));
    }
    Ok(1.0
        + 0.375 * (1.0 - p.specularity) * p.mean_free_path * (1.0 / cu_width + 1.0 / cu_height))
}

/// Cu resistivity after both scattering corrections for the given core.
pub fn effective_resistivity(p: &ScatteringParams, cs: &CrossSection) -> Result<f64> {
    Ok(p.rho_bulk * ms_factor(p)? * fs_factor(p, cs.cu_width, cs.cu_height)?)
}

/// Resistance per unit length in Ω/µm.
pub fn line_resistance(g: &WireGeometry, p: &ScatteringParams) -> Result<f64> {
    p.validate()?;
    let cs = g.cross_section()?;
    let rho_cu = effective_resistivity(p, &cs)?;
    let conductance_per_um = cs.cu_area * NM2_TO_UM2 / rho_cu
        + cs.liner_area * NM2_TO_UM2 / p.rho_liner
        + cs.barrier_area * NM2_TO_UM2 / p.rho_barrier;
    Ok(1.0 / conductance_per_um)
}

/// Lumped resistances seen by one column of bit-cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireModel {
    /// Ω/µm
    pub r_per_length: f64,
    pub r_via: f64,
    pub r_segment_sram: f64,
    pub r_segment_fefet: f64,
    pub r_driver: f64,
    pub r_sink: f64,
}

impl WireModel {
    /// No parasitics anywhere.
    pub fn ideal() -> Self {
        Self {
            r_per_length: 0.0,
            r_via: 0.0,
            r_segment_sram: 0.0,
            r_segment_fefet: 0.0,
            r_driver: 0.0,
            r_sink: 0.0,
        }
    }

    pub fn segment(&self, kind: CellKind) -> f64 {
        match kind {
            CellKind::Sram8T => self.r_segment_sram,
            CellKind::FeFet => self.r_segment_fefet,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.r_per_length,
            self.r_via,
            self.r_segment_sram,
            self.r_segment_fefet,
            self.r_driver,
            self.r_sink,
        ];
        if all.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::invalid("wire resistances must be finite and non-negative"));
        }
        Ok(())
    }
}

impl Default for WireModel {
    fn default() -> Self {
        build_wire_model(
            &WireGeometry::default(),
            &ScatteringParams::default(),
            DEFAULT_SRAM_CELL_HEIGHT_UM,
            DEFAULT_DRIVER_RESISTANCE,
            DEFAULT_SINK_RESISTANCE,
        )
        .expect("default wire parameters are valid")
    }
}

/// FeFET cells are half the height of 8T-SRAM cells.
pub fn build_wire_model(
    g: &WireGeometry,
    p: &ScatteringParams,
    sram_cell_height: f64,
    r_driver: f64,
    r_sink: f64,
) -> Result<WireModel> {
    if sram_cell_height < 0.0 {
        return Err(Error::invalid("cell height must be non-negative"));
    }
    let r_per_length = line_resistance(g, p)?;
    let model = WireModel {
        r_per_length,
        r_via: DEFAULT_VIA_RESISTANCE,
        r_segment_sram: r_per_length * sram_cell_height,
        r_segment_fefet: r_per_length * sram_cell_height / 2.0,
        r_driver,
        r_sink,
    };
    model.validate()?;
    Ok(model)
}
