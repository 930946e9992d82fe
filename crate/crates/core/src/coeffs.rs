//! Free-component coordinates for crossing tensors.
//!
//! Components come in orbits of the order-8 index group; one value per orbit
//! determines the tensor. For three flavors the 21 orbits carry the standard
//! `m1..m21` naming keyed to representatives `M1111, M1112, ..., M3333`; for
//! other flavor counts a canonical lexicographic orbit order is used.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tensor::{dim_w, CrossingTensor, FlavorDim, SYMMETRY_GROUP};

/// Orbit representatives for `n = 3`, in the canonical `m1..m21` order.
/// Zero-based indices; `M_REPS[4] = (0,1,0,1)` is `M1212`.
pub const M_REPS: [[usize; 4]; 21] = [
    [0, 0, 0, 0], // m1  = M1111
    [0, 0, 0, 1], // m2  = M1112
    [0, 0, 0, 2], // m3  = M1113
    [0, 0, 1, 1], // m4  = M1122
    [0, 1, 0, 1], // m5  = M1212
    [0, 0, 1, 2], // m6  = M1123
    [0, 1, 0, 2], // m7  = M1213
    [0, 0, 2, 2], // m8  = M1133
    [0, 2, 0, 2], // m9  = M1313
    [0, 1, 1, 1], // m10 = M1222
    [0, 1, 1, 2], // m11 = M1223
    [0, 1, 2, 1], // m12 = M1232
    [0, 1, 2, 2], // m13 = M1233
    [0, 2, 1, 2], // m14 = M1323
    [0, 2, 2, 2], // m15 = M1333
    [1, 1, 1, 1], // m16 = M2222
    [1, 1, 1, 2], // m17 = M2223
    [1, 1, 2, 2], // m18 = M2233
    [1, 2, 1, 2], // m19 = M2323
    [1, 2, 2, 2], // m20 = M2333
    [2, 2, 2, 2], // m21 = M3333
];

/// The canonical JSON key for each of the 21 components, in `m` order.
pub const M_KEYS: [&str; 21] = [
    "M1111", "M1112", "M1113", "M1122", "M1212", "M1123", "M1213", "M1133", "M1313", "M1222",
    "M1223", "M1232", "M1233", "M1323", "M1333", "M2222", "M2223", "M2233", "M2323", "M2333",
    "M3333",
];

/// Reference coefficient point shipped as the CLI fixture `fig1-ref`, the
/// default center for region scans. Values in `m1..m21` order.
pub const FIG1_REF_COEFFS: [f64; 21] = [
    0.332,  // M1111
    0.022,  // M1112
    0.12,   // M1113
    0.056,  // M1122
    0.428,  // M1212
    0.086,  // M1123
    -0.252, // M1213
    -0.2,   // M1133
    0.356,  // M1313
    0.12,   // M1222
    -0.184, // M1223
    -0.172, // M1232
    -0.04,  // M1233
    -0.05,  // M1323
    -0.124, // M1333
    0.476,  // M2222
    0.12,   // M2223
    -0.14,  // M2233
    0.626,  // M2323
    -0.028, // M2333
    0.332,  // M3333
];

fn orbit_of(n: usize, rep: [usize; 4]) -> Vec<[usize; 4]> {
    let mut orbit: Vec<[usize; 4]> = SYMMETRY_GROUP
        .iter()
        .map(|p| [rep[p[0]], rep[p[1]], rep[p[2]], rep[p[3]]])
        .collect();
    orbit.sort();
    orbit.dedup();
    debug_assert!(orbit.iter().all(|t| t.iter().all(|&i| i < n)));
    orbit
}

/// All orbit representatives for `n` flavors: the `m` order for `n = 3`,
/// lexicographically smallest representatives in lex order otherwise.
pub fn orbit_reps(n: usize) -> Vec<[usize; 4]> {
    if n == 3 {
        return M_REPS.to_vec();
    }
    let mut reps = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let t = [i, j, k, l];
                    let canon = *orbit_of(n, t).first().unwrap();
                    if canon == t {
                        reps.push(t);
                    }
                }
            }
        }
    }
    reps
}

/// Free components of a crossing tensor in the canonical order for its
/// flavor count.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    n: FlavorDim,
    values: Vec<f64>,
}

impl CoeffVector {
    pub fn new(n: FlavorDim, values: Vec<f64>) -> Result<Self> {
        let want = dim_w(n.get());
        if values.len() != want {
            return Err(Error::DimMismatch(format!(
                "expected {} coefficients for n={}, got {}",
                want,
                n.get(),
                values.len()
            )));
        }
        Ok(CoeffVector { n, values })
    }

    pub fn n(&self) -> FlavorDim {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Builds the tensor whose orbit values are the given coefficients.
pub fn from_coeffs(n: FlavorDim, values: &[f64]) -> Result<CrossingTensor> {
    let cv = CoeffVector::new(n, values.to_vec())?;
    let nn = n.get();
    let mut comp = vec![0.0; nn * nn * nn * nn];
    for (rep, &v) in orbit_reps(nn).iter().zip(cv.values.iter()) {
        for t in orbit_of(nn, *rep) {
            comp[((t[0] * nn + t[1]) * nn + t[2]) * nn + t[3]] = v;
        }
    }
    Ok(CrossingTensor::from_components_unchecked(nn, comp))
}

/// Reads the free components of a tensor (one value per index orbit).
pub fn to_coeffs(t: &CrossingTensor) -> CoeffVector {
    let n = t.n();
    let values = orbit_reps(n)
        .iter()
        .map(|r| t.get(r[0], r[1], r[2], r[3]))
        .collect();
    CoeffVector {
        n: FlavorDim::new(n).expect("tensor carries a valid flavor dim"),
        values,
    }
}

/// Parses the 21-coefficient JSON format for three flavors.
///
/// Accepted shapes: an object with exactly the 21 canonical `M____` keys, or
/// an object with the single key `"coeffs"` holding a 21-array in `m` order.
/// Unknown keys, missing keys and non-finite values are rejected.
pub fn coeffs_from_json(text: &str) -> Result<CrossingTensor> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::BadInput(format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::BadInput("top-level JSON value must be an object".into()))?;

    let n3 = FlavorDim::new(3).expect("3 is a valid flavor dim");
    if obj.len() == 1 && obj.contains_key("coeffs") {
        let arr = obj["coeffs"]
            .as_array()
            .ok_or_else(|| Error::BadInput("\"coeffs\" must be an array".into()))?;
        if arr.len() != 21 {
            return Err(Error::BadInput(format!(
                "\"coeffs\" must hold 21 numbers, got {}",
                arr.len()
            )));
        }
        let mut vals = Vec::with_capacity(21);
        for (i, v) in arr.iter().enumerate() {
            let x = v
                .as_f64()
                .ok_or_else(|| Error::BadInput(format!("coeffs[{i}] is not a number")))?;
            if !x.is_finite() {
                return Err(Error::BadInput(format!("coeffs[{i}] is not finite")));
            }
            vals.push(x);
        }
        return from_coeffs(n3, &vals);
    }

    let mut map: BTreeMap<&str, f64> = BTreeMap::new();
    for (k, v) in obj {
        if !M_KEYS.contains(&k.as_str()) {
            return Err(Error::BadInput(format!("unknown key {k:?}")));
        }
        let x = v
            .as_f64()
            .ok_or_else(|| Error::BadInput(format!("value of {k:?} is not a number")))?;
        if !x.is_finite() {
            return Err(Error::BadInput(format!("value of {k:?} is not finite")));
        }
        map.insert(k, x);
    }
    if map.len() != 21 {
        let missing: Vec<&str> = M_KEYS
            .iter()
            .filter(|k| !map.contains_key(**k))
            .copied()
            .collect();
        return Err(Error::BadInput(format!("missing keys: {missing:?}")));
    }
    let vals: Vec<f64> = M_KEYS.iter().map(|k| map[*k]).collect();
    from_coeffs(n3, &vals)
}

/// Serializes a three-flavor tensor to the canonical keyed JSON object.
pub fn coeffs_to_json(t: &CrossingTensor) -> Result<String> {
    if t.n() != 3 {
        return Err(Error::RequiresThreeFlavors(t.n()));
    }
    let cv = to_coeffs(t);
    let mut obj = serde_json::Map::new();
    for (k, v) in M_KEYS.iter().zip(cv.values()) {
        obj.insert(
            k.to_string(),
            serde_json::Number::from_f64(*v)
                .map(serde_json::Value::Number)
                .ok_or_else(|| Error::BadInput(format!("component {k} is not finite")))?,
        );
    }
    Ok(serde_json::to_string_pretty(&serde_json::Value::Object(obj)).expect("valid JSON"))
}
