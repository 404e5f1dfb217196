use std::collections::BTreeMap;

use noise_core::scenarios::{from_generator, Scenario};
use noise_core::{Elem, NoiseBooleanAlgebra, RandomVariable};

use crate::{Failure, GlobalArgs};

pub fn scenario(g: &GlobalArgs) -> Result<Scenario, Failure> {
    let mut sc = match (&g.scenario, &g.gen) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Load(format!("{}: {e}", path.display())))?;
            Scenario::from_json(&text).map_err(|e| Failure::Load(e.to_string()))?
        }
        (None, Some(name)) => {
            let mut params = BTreeMap::new();
            for kv in &g.params {
                let (k, v) = kv.split_once('=').ok_or_else(|| Failure::Load(format!("parameter {kv:?} is not key=value")))?;
                params.insert(k.trim().to_string(), v.trim().to_string());
            }
            for (key, value) in [("m", g.m), ("depth", g.depth), ("n", g.n)] {
                if let Some(v) = value {
                    params.insert(key.to_string(), v.to_string());
                }
            }
            from_generator(name, &params).map_err(|e| Failure::Load(e.to_string()))?
        }
        (None, None) => return Err(Failure::Load("one of --scenario or --gen is required".into())),
    };
    sc.space = sc.space.clone().with_tolerance(g.tol);
    Ok(sc)
}

pub fn algebra(sc: &Scenario) -> Result<NoiseBooleanAlgebra, Failure> {
    sc.algebra().map_err(|e| Failure::Load(format!("scenario atoms do not form an independency: {e}")))
}

/// A product of named random variables written `a*b*c`; `1` is the
/// constant.
pub fn rv(sc: &Scenario, spec: &str) -> Result<RandomVariable, Failure> {
    spec.split('*').try_fold(RandomVariable::constant(sc.space.len(), 1.0), |acc, name| match name.trim() {
        "1" => Ok(acc),
        name => {
            let f = sc.rv(name).map_err(|e| Failure::Load(e.to_string()))?;
            Ok(&acc * f)
        }
    })
}

/// An element written as `+`-joined field names; `0` and `1` are the
/// bounds.
pub fn elem(sc: &Scenario, b: &NoiseBooleanAlgebra, spec: &str) -> Result<Elem, Failure> {
    match spec.trim() {
        "0" => return Ok(b.bottom()),
        "1" => return Ok(b.top()),
        _ => {}
    }
    spec.split('+').try_fold(Elem::ZERO, |acc, name| {
        let e = sc.elem(b, name.trim()).map_err(|e| Failure::Load(format!("element {name:?}: {e}")))?;
        Ok(acc.join(e))
    })
}

/// Atom names below an element.
pub fn atom_names(sc: &Scenario, s: Elem) -> Vec<String> {
    s.atom_indices().map(|i| sc.atoms[i].clone()).collect()
}

pub fn parse_floats(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Failure::Load(format!("not a number: {t:?}"))))
        .collect()
}
