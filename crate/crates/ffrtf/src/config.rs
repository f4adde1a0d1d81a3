//! Run configuration: a line-oriented `key = value` format.
//!
//! ```text
//! # comments run to end of line
//! version = 1
//! q = 3
//! f = t^2+1
//! sigma_plus = t
//! sigma_minus = t-1, t^2+t+2
//! D = t+1^2, inf^1          # or `0`; mutually exclusive with max_deg
//! max_deg = 2               # sweep every effective D of degree ≤ 2 off R ∪ Σ
//! per_degree = 3            # optional cap on divisors per degree in a sweep
//! alpha = 2, 3, 5           # Satake samples for local-chars
//! suites = local-lemmas, orbital-vs-N
//! ```
//!
//! Places in `sigma_*` and `D` are monic irreducible polynomials in `t`;
//! `inf` names ∞ (accepted in `D`, refused in Σ). Each key may appear once.

use std::fmt;

use num_rational::BigRational;

use crate::algebra::{parse_rational, Poly, PrimeField};
use crate::moduli::Setting;
use crate::places::{enumerate_effective_divisors, DoubleCover, Divisor, Place, SigmaData};

pub const GRAMMAR_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}, field `{field}`: {msg}")]
    Field { line: usize, field: String, msg: String },
    #[error("missing field `{0}`")]
    Missing(&'static str),
    #[error("refused: {0}")]
    Precondition(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    LocalLemmas,
    LocalChars,
    Eta,
    OrbitalVsN,
    Regularized,
    MVsN,
    PicardSanity,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::LocalLemmas,
        Suite::LocalChars,
        Suite::Eta,
        Suite::OrbitalVsN,
        Suite::Regularized,
        Suite::MVsN,
        Suite::PicardSanity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::LocalLemmas => "local-lemmas",
            Suite::LocalChars => "local-chars",
            Suite::Eta => "eta",
            Suite::OrbitalVsN => "orbital-vs-N",
            Suite::Regularized => "regularized",
            Suite::MVsN => "M-vs-N",
            Suite::PicardSanity => "picard-sanity",
        }
    }

    pub fn from_name(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which divisors D the global suites run over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DivisorChoice {
    Single(Divisor),
    Sweep { max_deg: usize, per_degree: Option<usize> },
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub cover: DoubleCover,
    pub sigma: SigmaData,
    pub divisors: DivisorChoice,
    pub suites: Vec<Suite>,
    pub alpha: Vec<BigRational>,
    /// Ramified place index whose η sign the X route corrupts (mutation testing).
    pub eta_flip: Option<usize>,
}

impl RunConfig {
    pub fn parse(src: &str) -> Result<RunConfig, ConfigError> {
        let raw = collect(src)?;
        let get = |k: &str| raw.iter().find(|(key, _, _)| key == k).map(|(_, v, l)| (v.as_str(), *l));

        if let Some((v, line)) = get("version") {
            if v.parse::<u32>().ok() != Some(GRAMMAR_VERSION) {
                return Err(field(line, "version", format!("unsupported version `{v}`, expected {GRAMMAR_VERSION}")));
            }
        }
        let (qs, ql) = get("q").ok_or(ConfigError::Missing("q"))?;
        let q: u32 = qs.parse().map_err(|_| field(ql, "q", format!("`{qs}` is not an integer")))?;
        let k = PrimeField::new(q).map_err(|e| field(ql, "q", e.to_string()))?;
        if q == 2 {
            return Err(field(ql, "q", "characteristic 2 is out of scope".into()));
        }

        let (fs, fl) = get("f").ok_or(ConfigError::Missing("f"))?;
        let f = Poly::parse(k, fs).map_err(|e| field(fl, "f", e.to_string()))?;
        if f.deg().is_some_and(|d| d % 2 == 1) {
            return Err(ConfigError::Precondition(format!("∞ ∉ R needs deg f even, got deg f = {}", f.degree())));
        }
        let cover = DoubleCover::new(f).map_err(|e| field(fl, "f", e.to_string()))?;

        let plus = places_list(k, get("sigma_plus"), "sigma_plus")?;
        let minus = places_list(k, get("sigma_minus"), "sigma_minus")?;
        for (pi, name) in plus.iter().map(|p| (p, "Σ₊")).chain(minus.iter().map(|p| (p, "Σ₋"))) {
            if cover.ramified().contains(pi) {
                return Err(ConfigError::Precondition(format!("Σ ∩ R = ∅ fails: {pi} ∈ {name} ∩ R")));
            }
        }
        let sigma = SigmaData::new(&cover, plus, minus).map_err(|e| ConfigError::Precondition(e.to_string()))?;

        let divisors = match (get("D"), get("max_deg")) {
            (Some(_), Some((_, l))) => return Err(field(l, "max_deg", "give either D or max_deg, not both".into())),
            (None, None) => return Err(ConfigError::Missing("D")),
            (Some((ds, dl)), None) => {
                if get("per_degree").is_some() {
                    return Err(field(dl, "D", "per_degree only applies to a max_deg sweep".into()));
                }
                DivisorChoice::Single(parse_divisor(k, ds).map_err(|m| field(dl, "D", m))?)
            }
            (None, Some((ms, ml))) => {
                let max_deg = ms.parse().map_err(|_| field(ml, "max_deg", format!("`{ms}` is not an integer")))?;
                if max_deg > 6 {
                    return Err(field(ml, "max_deg", format!("{max_deg} exceeds the supported sweep depth 6")));
                }
                let per_degree = match get("per_degree") {
                    Some((ps, pl)) => {
                        Some(ps.parse().map_err(|_| field(pl, "per_degree", format!("`{ps}` is not an integer")))?)
                    }
                    None => None,
                };
                DivisorChoice::Sweep { max_deg, per_degree }
            }
        };

        let alpha = match get("alpha") {
            None => Vec::new(),
            Some((s, l)) => split_list(s)
                .map(|a| {
                    let r = parse_rational(a).map_err(|e| field(l, "alpha", e.to_string()))?;
                    if num_traits::Zero::is_zero(&r) {
                        return Err(field(l, "alpha", "Satake parameter must be nonzero".into()));
                    }
                    Ok(r)
                })
                .collect::<Result<_, _>>()?,
        };

        let suites = match get("suites") {
            None => Suite::ALL.to_vec(),
            Some((s, l)) => {
                let mut v = Vec::new();
                for name in split_list(s) {
                    let suite = Suite::from_name(name).ok_or_else(|| field(l, "suites", format!("unknown suite `{name}`")))?;
                    if !v.contains(&suite) {
                        v.push(suite);
                    }
                }
                v
            }
        };

        let cfg = RunConfig { cover, sigma, divisors, suites, alpha, eta_flip: None };
        if let DivisorChoice::Single(dv) = &cfg.divisors {
            let (_, line) = get("D").expect("D present");
            cfg.setting().check_divisor(dv).map_err(|e| field(line, "D", e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn setting(&self) -> Setting {
        let set = Setting::new(self.cover.clone(), self.sigma.clone());
        match self.eta_flip {
            Some(x) => set.with_eta_flip(x),
            None => set,
        }
    }

    /// The divisors the global suites visit, in canonical order.
    pub fn divisor_list(&self) -> Vec<Divisor> {
        match &self.divisors {
            DivisorChoice::Single(d) => vec![d.clone()],
            DivisorChoice::Sweep { max_deg, per_degree } => {
                let mut avoid = self.cover.ramified_places();
                avoid.extend(self.sigma.places());
                let mut out = Vec::new();
                for d in 0..=*max_deg {
                    let all = enumerate_effective_divisors(self.cover.field(), d, &avoid);
                    out.extend(all.into_iter().take(per_degree.unwrap_or(usize::MAX)));
                }
                out
            }
        }
    }

    /// Canonical one-line-per-key rendering; parsing it gives back the same config.
    pub fn canonical(&self) -> String {
        let list = |v: &[Poly]| v.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
        let mut out = vec![
            format!("version = {GRAMMAR_VERSION}"),
            format!("q = {}", self.cover.q()),
            format!("f = {}", self.cover.f()),
            format!("sigma_plus = {}", list(&self.sigma.plus)),
            format!("sigma_minus = {}", list(&self.sigma.minus)),
        ];
        match &self.divisors {
            DivisorChoice::Single(d) => out.push(format!("D = {d}")),
            DivisorChoice::Sweep { max_deg, per_degree } => {
                out.push(format!("max_deg = {max_deg}"));
                if let Some(n) = per_degree {
                    out.push(format!("per_degree = {n}"));
                }
            }
        }
        if !self.alpha.is_empty() {
            out.push(format!("alpha = {}", self.alpha.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")));
        }
        out.push(format!("suites = {}", self.suites.iter().map(|s| s.name()).collect::<Vec<_>>().join(",")));
        out.join("\n") + "\n"
    }
}

fn field(line: usize, name: &str, msg: String) -> ConfigError {
    ConfigError::Field { line, field: name.to_string(), msg }
}

const KEYS: [&str; 10] = ["version", "q", "f", "sigma_plus", "sigma_minus", "D", "max_deg", "per_degree", "alpha", "suites"];

/// (key, value, line) for every non-blank line, comments stripped.
fn collect(src: &str) -> Result<Vec<(String, String, usize)>, ConfigError> {
    let mut out: Vec<(String, String, usize)> = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(field(line, body, "expected `key = value`".into()));
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(field(line, k, "unknown key".into()));
        }
        if let Some((_, _, first)) = out.iter().find(|(key, _, _)| key == k) {
            return Err(field(line, k, format!("duplicate key (first set on line {first})")));
        }
        out.push((k.to_string(), v.to_string(), line));
    }
    Ok(out)
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

fn places_list(k: PrimeField, entry: Option<(&str, usize)>, name: &str) -> Result<Vec<Poly>, ConfigError> {
    let Some((s, line)) = entry else {
        return Ok(Vec::new());
    };
    split_list(s)
        .map(|item| match Place::parse(k, item).map_err(|e| field(line, name, e.to_string()))? {
            Place::Infinity => Err(ConfigError::Precondition(format!("∞ ∉ Σ fails: `inf` listed in {name}"))),
            Place::Finite(pi) => Ok(pi),
        })
        .collect()
}

/// `poly^mult,...` (the multiplicity is mandatory) or `0`.
pub fn parse_divisor(k: PrimeField, s: &str) -> Result<Divisor, String> {
    let mut dv = Divisor::zero();
    if s.trim() == "0" {
        return Ok(dv);
    }
    for item in split_list(s) {
        let (p, m) = item.rsplit_once('^').ok_or_else(|| format!("`{item}` lacks a multiplicity `^m`"))?;
        let m: i64 = m.trim().parse().map_err(|_| format!("bad multiplicity in `{item}`"))?;
        if !(1..=64).contains(&m) {
            return Err(format!("multiplicity {m} in `{item}` outside 1..=64"));
        }
        let place = Place::parse(k, p).map_err(|e| e.to_string())?;
        if dv.mult(&place) != 0 {
            return Err(format!("place {place} repeated"));
        }
        dv.add_at(place, m);
    }
    if dv.degree() > 16 {
        return Err(format!("deg D = {} exceeds 16", dv.degree()));
    }
    Ok(dv)
}

/// Parse entry point shared by the CLI and the fuzz target.
pub fn parse(src: &str) -> Result<RunConfig, ConfigError> {
    RunConfig::parse(src)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG_A: &str = "q = 3\nf = t^2+1\nsigma_plus = t\nD = t+1^1\n";

    #[test]
    fn roundtrip_through_canonical() {
        let c = parse(CFG_A).unwrap();
        let again = parse(&c.canonical()).unwrap();
        assert_eq!(c.canonical(), again.canonical());
        assert_eq!(c.suites.len(), 7);
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let e = parse("q = 3\n# c\nf = t^2+1\nD = t+^1\n").unwrap_err();
        assert!(matches!(e, ConfigError::Field { line: 4, ref field, .. } if field == "D"), "{e}");
        let e = parse("q = 4\nf = t^2+1\nD = 0").unwrap_err();
        assert!(matches!(e, ConfigError::Field { line: 1, ref field, .. } if field == "q"));
        let e = parse("q = 3\nf = t^2+1\nD = 0\nsuites = eta, nope").unwrap_err();
        assert!(e.to_string().contains("line 4, field `suites`"), "{e}");
        assert_eq!(parse("f = t^2+1\nD = 0").unwrap_err(), ConfigError::Missing("q"));
    }

    #[test]
    fn refusals_name_the_inequality() {
        let e = parse("q = 5\nf = t^2-t\nsigma_minus = t\nD = 0").unwrap_err();
        assert!(e.to_string().contains("Σ ∩ R = ∅"), "{e}");
        let e = parse("q = 5\nf = t^3-t\nD = 0").unwrap_err();
        assert!(e.to_string().contains("deg f even"), "{e}");
        let e = parse("q = 5\nf = t^2-t\nsigma_plus = inf\nD = 0").unwrap_err();
        assert!(e.to_string().contains("∞ ∉ Σ"), "{e}");
        let e = parse("q = 5\nf = t^2-t\nsigma_plus = t-3\nD = t-3^1").unwrap_err();
        assert!(e.to_string().contains("meets R ∪ Σ"), "{e}");
    }

    #[test]
    fn divisor_grammar() {
        let k = PrimeField::new(3).unwrap();
        let d = parse_divisor(k, "t^2+1^2, inf^1").unwrap();
        assert_eq!(d.degree(), 5);
        assert_eq!(parse_divisor(k, &d.render()).unwrap(), d);
        assert!(parse_divisor(k, "t^2+1").is_err());
        assert!(parse_divisor(k, "t^2^1").is_err());
    }

    #[test]
    fn sweep_respects_avoidance_and_cap() {
        let c = parse("q = 3\nf = t^2+1\nsigma_plus = t\nmax_deg = 2\nper_degree = 2").unwrap();
        let ds = c.divisor_list();
        assert_eq!(ds.len(), 1 + 2 + 2);
        let set = c.setting();
        assert!(ds.iter().all(|d| set.check_divisor(d).is_ok()));
    }
}
