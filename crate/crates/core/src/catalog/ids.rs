//! String ids for catalog entries.
//!
//! | id | model |
//! |----|-------|
//! | `gaussian-shrinker:n=N[,b=B][,tau=T]` | `R^N`, `f = |x|²/(4τ) + B·x_1` |
//! | `sphere:n=N[,tau=T]` | round `S^N` of radius `√(2τ(N-1))` |
//! | `cylinder:k=K,m=M[,tau=T]` | `S^K × R^M` |
//! | `cigar` | Hamilton's cigar |
//! | `gaussian-expander:n=N[,b=B]` | `R^N`, `f = |x|²/4 + B·x_1` |
//! | `einstein-expander-product:k=K,m=M,vol=V[,diam=D]` | `N^K × R^M` with `Ric_N = -g/2` |

use super::SolitonModel;
use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// The catalog enumerated by `list` and by `--models all`.
pub fn default_catalog_ids() -> Vec<&'static str> {
    vec![
        "gaussian-shrinker:n=1",
        "gaussian-shrinker:n=2",
        "gaussian-shrinker:n=3",
        "gaussian-shrinker:n=4",
        "sphere:n=2",
        "sphere:n=3",
        "cylinder:k=2,m=2",
        "cylinder:k=3,m=1",
        "cigar",
        "gaussian-expander:n=3",
        "einstein-expander-product:k=2,m=2,vol=25",
    ]
}

pub(crate) fn with_tau(id: String, tau: f64) -> String {
    if tau == 1.0 {
        id
    } else {
        format!("{id},tau={tau}")
    }
}

pub(crate) fn gaussian_id(prefix: &str, n: usize, tilt: &[f64], tau: f64) -> String {
    let mut id = format!("{prefix}:n={n}");
    let nonzero = tilt.iter().any(|b| *b != 0.0);
    if nonzero {
        if tilt[1..].iter().all(|b| *b == 0.0) {
            id.push_str(&format!(",b={}", tilt[0]));
        } else {
            let parts: Vec<String> = tilt.iter().map(|b| b.to_string()).collect();
            id.push_str(&format!(",b=[{}]", parts.join(";")));
        }
    }
    with_tau(id, tau)
}

struct Params {
    id: String,
    map: BTreeMap<String, String>,
}

impl Params {
    fn parse(id: &str, body: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        if !body.is_empty() {
            for part in body.split(',') {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| Error::InvalidModelId(id.to_string()))?;
                if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                    return Err(Error::InvalidModelId(format!("{id}: repeated key `{k}`")));
                }
            }
        }
        Ok(Params {
            id: id.to_string(),
            map,
        })
    }

    fn usize(&mut self, key: &str) -> Result<usize> {
        let v = self
            .map
            .remove(key)
            .ok_or_else(|| Error::InvalidModelId(format!("{}: missing `{key}`", self.id)))?;
        v.parse()
            .map_err(|_| Error::InvalidModelId(format!("{}: `{key}={v}` is not an integer", self.id)))
    }

    fn f64_opt(&mut self, key: &str) -> Result<Option<f64>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| Error::InvalidModelId(format!("{}: `{key}={v}` is not a number", self.id))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::InvalidModelId(format!("{}: unknown key `{k}`", self.id))),
        }
    }
}

fn tilt_vector(n: usize, b: Option<f64>) -> Option<Vec<f64>> {
    b.map(|b| {
        let mut v = vec![0.0; n];
        v[0] = b;
        v
    })
}

/// Build the catalog model named by `id`.
pub fn parse_model_id(id: &str) -> Result<SolitonModel> {
    let id = id.trim();
    let (name, body) = id.split_once(':').unwrap_or((id, ""));
    let mut p = Params::parse(id, body)?;
    let invalid = |e: Error| match e {
        Error::InvalidParameter(msg) => Error::InvalidModelId(format!("{id}: {msg}")),
        other => other,
    };
    let model = match name {
        "gaussian-shrinker" => {
            let n = p.usize("n")?;
            let b = p.f64_opt("b")?;
            let tau = p.f64_opt("tau")?.unwrap_or(1.0);
            p.finish()?;
            if n == 0 {
                return Err(Error::InvalidModelId(format!("{id}: n must be positive")));
            }
            SolitonModel::gaussian_shrinker(n, tilt_vector(n, b), tau)
        }
        "sphere" => {
            let n = p.usize("n")?;
            let tau = p.f64_opt("tau")?.unwrap_or(1.0);
            p.finish()?;
            SolitonModel::sphere(n, tau)
        }
        "cylinder" => {
            let k = p.usize("k")?;
            let m = p.usize("m")?;
            let tau = p.f64_opt("tau")?.unwrap_or(1.0);
            p.finish()?;
            SolitonModel::cylinder(k, m, tau)
        }
        "cigar" => {
            p.finish()?;
            SolitonModel::cigar()
        }
        "gaussian-expander" => {
            let n = p.usize("n")?;
            let b = p.f64_opt("b")?;
            p.finish()?;
            if n == 0 {
                return Err(Error::InvalidModelId(format!("{id}: n must be positive")));
            }
            SolitonModel::gaussian_expander(n, tilt_vector(n, b))
        }
        "einstein-expander-product" => {
            let k = p.usize("k")?;
            let m = p.usize("m")?;
            let vol = p
                .f64_opt("vol")?
                .ok_or_else(|| Error::InvalidModelId(format!("{id}: missing `vol`")))?;
            let diam = p.f64_opt("diam")?;
            p.finish()?;
            if k == 0 || m == 0 {
                return Err(Error::InvalidModelId(format!("{id}: k and m must be positive")));
            }
            SolitonModel::einstein_expander_product(k, m, vol, diam)
        }
        _ => return Err(Error::InvalidModelId(id.to_string())),
    };
    model.map_err(invalid)
}
