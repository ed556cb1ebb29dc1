use std::fmt::Write;

use raman_core::manifold::{retune, CouplingSet, ManifoldTag};
use raman_core::pathways::{
    compare_six_photon, enumerate_pathways, four_photon_rabi, generate_rabi_expression, six_photon_terms, DeltaMap,
    Splittings,
};
use raman_core::stark::{resonance_frequency, shift_table, ShiftMethod};
use raman_core::{Error, Result};
use serde_json::{json, Value};

use super::{hz, lock, to_value, Artifacts};
use crate::config::ExperimentConfig;

fn mj_label(twice: i32) -> String {
    if twice % 2 == 0 {
        format!("{}", twice / 2)
    } else {
        format!("{twice}/2")
    }
}

pub(super) fn shifts(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Value> {
    let t = &cfg.transition;
    let beams = cfg.beams()?;
    let numeric = resonance_frequency(&cfg.atom, &beams, t.initial, t.target, t.photons, cfg.include_f, ShiftMethod::NumericDressed)?;
    let second = resonance_frequency(&cfg.atom, &beams, t.initial, t.target, t.photons, cfg.include_f, ShiftMethod::SecondOrder)?;
    let tuned = retune(&beams, numeric.omega_r);
    let table2 = shift_table(&cfg.atom, &tuned, cfg.include_f, ShiftMethod::SecondOrder)?;
    let table_n = shift_table(&cfg.atom, &tuned, cfg.include_f, ShiftMethod::NumericDressed)?;
    let mut csv = String::from(
        "level,mj,par_second_order_hz,perp_second_order_hz,total_second_order_hz,total_numeric_hz\n",
    );
    for (k, level) in cfg.atom.lower.levels.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{k},{},{:.6e},{:.6e},{:.6e},{:.6e}",
            mj_label(level.mj.twice()),
            hz(table2.per_beam[0][k]),
            hz(table2.per_beam[1][k]),
            hz(table2.total[k]),
            hz(table_n.total[k])
        );
    }
    out.add("shifts.csv", csv);
    let bare = Splittings::bare(&cfg.atom).resonance(t.initial, t.target, t.photons);
    Ok(json!({
        "bare_resonance_hz": hz(bare),
        "second_order_resonance_hz": hz(second.omega_r),
        "numeric_resonance_hz": hz(numeric.omega_r),
        "differential_second_order_hz": hz(table2.differential(t.initial, t.target)),
        "differential_numeric_hz": hz(table_n.differential(t.initial, t.target)),
        "near_resonant": table2.near_resonant || table_n.near_resonant,
    }))
}

pub(super) fn rabi_expr(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Value> {
    let t = &cfg.transition;
    let beams = cfg.beams()?;
    let drive = lock(cfg, &beams)?;
    let dressed = drive.dressed_splittings()?;
    let paths = enumerate_pathways(&cfg.atom, &drive.beams, t.initial, t.target, t.photons, cfg.include_f)?;
    if paths.is_empty() {
        return Err(Error::invalid(format!(
            "no {}-photon pathways connect levels {} and {}",
            t.photons, t.initial, t.target
        )));
    }
    let delta = DeltaMap::from_beam(&cfg.atom, &drive.beams[0], cfg.include_f);
    let couplings = CouplingSet::new(&cfg.atom, &drive.beams, cfg.include_f)?;
    let expr = generate_rabi_expression(&paths, &delta, &dressed, drive.omega_r)?;
    let values = expr.term_values(&couplings);
    let total: raman_core::C64 = values.iter().sum();
    out.add("rabi_expr.txt", expr.pretty(&couplings));
    let mut csv = String::from("term,pathway,re_hz,im_hz,abs_hz\n");
    for (k, (term, v)) in expr.terms.iter().zip(&values).enumerate() {
        let _ = writeln!(csv, "{k},{},{:.9e},{:.9e},{:.9e}", term.pathway, hz(v.re), hz(v.im), hz(v.norm()));
    }
    out.add("rabi_expr.csv", csv);

    // Hand-written closed forms exist for the four- and six-photon
    // transitions out of the top sublevel, with bare splittings.
    let bare = Splittings::bare(&cfg.atom);
    let closed_form = match (t.initial, t.target, t.photons) {
        (0, 3, 4) | (0, 4, 6) => {
            let w = bare.resonance(t.initial, t.target, t.photons);
            let tuned = retune(&beams, w);
            let p_only = CouplingSet::new(&cfg.atom, &tuned, false)?;
            let par = p_only.matrix(0, ManifoldTag::P32).ok_or_else(|| Error::invalid("no P3/2 coupling"))?;
            let perp = p_only.matrix(1, ManifoldTag::P32).ok_or_else(|| Error::invalid("no P3/2 coupling"))?;
            let d = DeltaMap::from_beam(&cfg.atom, &tuned[0], false);
            let dp = d.get(ManifoldTag::P32).ok_or_else(|| Error::invalid("no P3/2 detuning"))?;
            let paths_p = enumerate_pathways(&cfg.atom, &tuned, t.initial, t.target, t.photons, false)?;
            let gen = generate_rabi_expression(&paths_p, &d, &bare, w)?;
            let gen_values = gen.term_values(&p_only);
            let gen_total: raman_core::C64 = gen_values.iter().sum();
            if t.photons == 4 {
                let closed = four_photon_rabi(par, perp, dp, &bare, w)?;
                json!({
                    "closed_form_hz": hz(closed.norm()),
                    "generated_hz": hz(gen_total.norm()),
                    "relative_difference": (closed - gen_total).norm() / gen_total.norm(),
                })
            } else {
                let closed = six_photon_terms(par, perp, dp, &bare, w)?;
                let cmp = compare_six_photon(closed, &paths_p, &gen_values, 0, 1);
                to_value(cmp)
            }
        }
        _ => Value::Null,
    };
    Ok(json!({
        "omega_r_hz": hz(drive.omega_r),
        "terms": values.len(),
        "analytic_hz": hz(total.norm()),
        "numeric_hz": hz(drive.rabi),
        "analytic_over_numeric": total.norm() / drive.rabi,
        "closed_form": closed_form,
    }))
}
