//! Browser bindings for three interactive experiments: the isometry-defect
//! curve, the derivative-decay profile, and the half-line range-defect
//! ladder. Each returns a JSON string for the static demo page to plot.

use absorbtk_core::absorption::{build_isometry, geometric_levels, isometry_defect};
use absorbtk_core::algebra::{builtin_instance, InstanceSpec};
use absorbtk_core::calculus::QuadratureSpec;
use absorbtk_core::halfline::{regularization_contrast, DefectSign, ProfileSpec};
use absorbtk_core::presentation::ModulePresentation;
use wasm_bindgen::prelude::*;

fn scaled_presentation(instance: &str) -> Result<ModulePresentation, String> {
    let spec = InstanceSpec::parse(instance).map_err(|e| e.to_string())?;
    let (_, pres) = builtin_instance(&spec).map_err(|e| e.to_string())?;
    let (scaled, _) = pres.rescale().map_err(|e| e.to_string())?;
    Ok(scaled)
}

fn json_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        "null".to_string()
    }
}

/// dfct(N) over a doubling ladder, against the 1/N law.
pub fn defect_curve_json(instance: &str, max_level: u32) -> Result<String, String> {
    let max_level = max_level.clamp(2, 4096) as usize;
    let scaled = scaled_presentation(instance)?;
    let gram = scaled.gram().map_err(|e| e.to_string())?;
    let mut points = Vec::new();
    let mut n = 2usize;
    while n <= max_level {
        let dfct = isometry_defect(gram.matrix(), n).map_err(|e| e.to_string())?;
        points.push(format!(
            "{{\"n\":{n},\"defect\":{},\"bound\":{}}}",
            json_num(dfct),
            json_num(1.0 / n as f64)
        ));
        n *= 2;
    }
    Ok(format!(
        "{{\"instance\":\"{instance}\",\"points\":[{}]}}",
        points.join(",")
    ))
}

/// r_n = ‖delta(sqrt(H_n) G^2)‖ over a geometric level grid, with the fitted
/// log-log slope (null for an exactly zero profile).
pub fn decay_curve_json(instance: &str, lo: u32, hi: u32) -> Result<String, String> {
    let lo = lo.max(2) as usize;
    let hi = (hi.max(lo as u32 + 1)).min(512) as usize;
    let scaled = scaled_presentation(instance)?;
    let sys = build_isometry(&scaled, hi).map_err(|e| e.to_string())?;
    let ns = geometric_levels(lo, hi);
    let profile = sys
        .decay_profile(&ns, &QuadratureSpec::default())
        .map_err(|e| e.to_string())?;
    let points: Vec<String> = profile
        .rows
        .iter()
        .map(|r| {
            format!(
                "{{\"n\":{},\"r\":{},\"r_integral\":{}}}",
                r.n,
                json_num(r.r_spectral),
                json_num(r.r_integral)
            )
        })
        .collect();
    let slope = profile
        .slope
        .map(json_num)
        .unwrap_or_else(|| "null".to_string());
    Ok(format!(
        "{{\"instance\":\"{instance}\",\"slope\":{slope},\"points\":[{}]}}",
        points.join(",")
    ))
}

/// Range defects of the minimal Dirac and its regularised version across a
/// doubling refinement ladder, probing with e^(-t).
pub fn halfline_defects_json(length: f64, coarse: u32, rungs: u32) -> Result<String, String> {
    if !(length.is_finite() && length > 1.0) {
        return Err("length must exceed 1".to_string());
    }
    let coarse = coarse.clamp(63, 4095) as usize;
    let rungs = rungs.clamp(1, 5);
    let ladder: Vec<usize> = (0..rungs)
        .map(|k| (coarse + 1) * (1usize << k) - 1)
        .collect();
    let rows = regularization_contrast(length, &ladder, &ProfileSpec::Default)
        .map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for &m in &ladder {
        let find = |sign: DefectSign, reg: bool| {
            rows.iter()
                .find(|r| r.interior == m && r.sign == sign && r.regularized == reg)
                .map(|r| r.defect)
                .unwrap_or(f64::NAN)
        };
        let h = length / (m as f64 + 1.0);
        out.push(format!(
            "{{\"h\":{},\"minus\":{},\"plus\":{},\"reg_minus\":{}}}",
            json_num(h),
            json_num(find(DefectSign::Minus, false)),
            json_num(find(DefectSign::Plus, false)),
            json_num(find(DefectSign::Minus, true))
        ));
    }
    Ok(format!("{{\"length\":{length},\"points\":[{}]}}", out.join(",")))
}

#[wasm_bindgen]
pub fn defect_curve(instance: &str, max_level: u32) -> Result<String, JsValue> {
    defect_curve_json(instance, max_level).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn decay_curve(instance: &str, lo: u32, hi: u32) -> Result<String, JsValue> {
    decay_curve_json(instance, lo, hi).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn halfline_defects(length: f64, coarse: u32, rungs: u32) -> Result<String, JsValue> {
    halfline_defects_json(length, coarse, rungs).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn instance_names() -> String {
    let names: Vec<String> = absorbtk_core::algebra::builtin_suite()
        .iter()
        .map(|s| format!("\"{}\"", s.name()))
        .collect();
    format!("[{}]", names.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defect_curve_produces_points_under_the_law() {
        let json = defect_curve_json("pauli", 256).unwrap();
        assert!(json.contains("\"n\":256"));
        assert!(json.contains("\"bound\""));
    }

    #[test]
    fn decay_curve_reports_slope_near_minus_one() {
        let json = decay_curve_json("pauli", 16, 128).unwrap();
        let slope: f64 = json
            .split("\"slope\":")
            .nth(1)
            .unwrap()
            .split(',')
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert!((-1.2..=-0.8).contains(&slope), "slope {slope}");
    }

    #[test]
    fn decay_curve_zero_profile_has_null_slope() {
        let json = decay_curve_json("scalar", 8, 32).unwrap();
        assert!(json.contains("\"slope\":null"));
    }

    #[test]
    fn halfline_defects_show_the_asymmetry() {
        let json = halfline_defects_json(30.0, 511, 2).unwrap();
        assert!(json.contains("\"minus\""));
        let minus: f64 = json
            .split("\"minus\":")
            .nth(1)
            .unwrap()
            .split(',')
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert!(minus >= 0.9);
    }

    #[test]
    fn unknown_instance_is_an_error() {
        assert!(defect_curve_json("torus", 64).is_err());
    }
}
