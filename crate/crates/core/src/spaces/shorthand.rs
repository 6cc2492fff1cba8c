//! Compact text form of [`NormSpec`].
//!
//! ```text
//! lp:P                  Lebesgue
//! lorentz:P,Q           L^{p,q}; Q = inf gives L^{p,∞}
//! lambda:PHI            Λ_φ
//! lambda-q:Q:PHI        Λ^q_φ
//! marc:PHI              M_φ
//! weak-marc:PHI         M*_φ
//! marc-p:P:PHI          M^p_φ
//! marc-p-loc:P:PHI      M^p_{φ,loc}
//! orlicz:power:R        Luxemburg norm of x^R
//! max:S|S|...           intersection (maximum of norms)
//!
//! PHI = power:A | powerlog:A,B | const:C, optionally followed by @CAP
//! ```

use super::norm::NormSpec;
use super::phi::{FundamentalFn, PhiForm};
use super::young::NFunction;
use crate::error::{Error, Result};

fn num(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|_| Error::invalid(format!("not a number: {t:?}"))),
    }
}

fn parse_phi(s: &str) -> Result<FundamentalFn> {
    let (body, cap) = match s.split_once('@') {
        Some((b, c)) => (b, Some(num(c)?)),
        None => (s, None),
    };
    let (kind, args) = body
        .split_once(':')
        .ok_or_else(|| Error::invalid(format!("phi needs KIND:ARGS, got {body:?}")))?;
    let mut phi = match kind {
        "power" => FundamentalFn::power(num(args)?),
        "powerlog" => {
            let (a, b) = args.split_once(',').ok_or_else(|| Error::invalid("powerlog needs A,B"))?;
            FundamentalFn::power_log(num(a)?, num(b)?)
        }
        "const" => FundamentalFn::constant(num(args)?),
        other => return Err(Error::invalid(format!("unknown phi kind {other:?}"))),
    };
    if let Some(c) = cap {
        phi = phi.capped(c);
    }
    Ok(phi)
}

pub fn parse(s: &str) -> Result<NormSpec> {
    let s = s.trim();
    let (head, rest) = s
        .split_once(':')
        .ok_or_else(|| Error::invalid(format!("space shorthand needs FAMILY:ARGS, got {s:?}")))?;
    let two = |rest: &str| -> Result<(f64, FundamentalFn)> {
        let (x, phi) = rest.split_once(':').ok_or_else(|| Error::invalid(format!("{head} needs NUMBER:PHI")))?;
        Ok((num(x)?, parse_phi(phi)?))
    };
    let spec = match head {
        "lp" => NormSpec::Lp { p: num(rest)? },
        "lorentz" => {
            let (p, q) = rest.split_once(',').ok_or_else(|| Error::invalid("lorentz needs P,Q"))?;
            let (p, q) = (num(p)?, num(q)?);
            if q.is_infinite() {
                NormSpec::LorentzPInf { p }
            } else {
                NormSpec::LorentzPq { p, q }
            }
        }
        "lambda" => NormSpec::LambdaPhi { phi: parse_phi(rest)? },
        "lambda-q" => {
            let (q, phi) = two(rest)?;
            NormSpec::LambdaQPhi { phi, q }
        }
        "marc" => NormSpec::Marcinkiewicz { phi: parse_phi(rest)? },
        "weak-marc" => NormSpec::WeakMarcinkiewicz { phi: parse_phi(rest)? },
        "marc-p" => {
            let (p, phi) = two(rest)?;
            NormSpec::MarcinkiewiczP { phi, p }
        }
        "marc-p-loc" => {
            let (p, phi) = two(rest)?;
            NormSpec::MarcinkiewiczPLoc { phi, p }
        }
        "orlicz" => {
            let r = rest.strip_prefix("power:").ok_or_else(|| Error::invalid("orlicz shorthand supports power:R only"))?;
            NormSpec::OrliczLux { psi: NFunction::Power { exponent: num(r)? } }
        }
        "max" => NormSpec::IntersectionMax { parts: rest.split('|').map(parse).collect::<Result<Vec<_>>>()? },
        other => return Err(Error::invalid(format!("unknown space family {other:?}"))),
    };
    spec.validate()?;
    Ok(spec)
}

fn print_phi(phi: &FundamentalFn) -> Option<String> {
    let body = match &phi.form {
        PhiForm::Power { exponent } if *exponent == 0.0 => format!("const:{}", phi.scale),
        PhiForm::Power { exponent } if phi.scale == 1.0 => format!("power:{exponent}"),
        PhiForm::PowerLog { exponent, log_exponent } if phi.scale == 1.0 => format!("powerlog:{exponent},{log_exponent}"),
        _ => return None,
    };
    Some(match phi.cap {
        Some(c) => format!("{body}@{c}"),
        None => body,
    })
}

/// The shorthand for `spec`, when it has one.
pub fn print(spec: &NormSpec) -> Option<String> {
    Some(match spec {
        NormSpec::Lp { p } => format!("lp:{p}"),
        NormSpec::LorentzPq { p, q } => format!("lorentz:{p},{q}"),
        NormSpec::LorentzPInf { p } => format!("lorentz:{p},inf"),
        NormSpec::LambdaPhi { phi } => format!("lambda:{}", print_phi(phi)?),
        NormSpec::LambdaQPhi { phi, q } => format!("lambda-q:{q}:{}", print_phi(phi)?),
        NormSpec::Marcinkiewicz { phi } => format!("marc:{}", print_phi(phi)?),
        NormSpec::WeakMarcinkiewicz { phi } => format!("weak-marc:{}", print_phi(phi)?),
        NormSpec::MarcinkiewiczP { phi, p } => format!("marc-p:{p}:{}", print_phi(phi)?),
        NormSpec::MarcinkiewiczPLoc { phi, p } => format!("marc-p-loc:{p}:{}", print_phi(phi)?),
        NormSpec::OrliczLux { psi: NFunction::Power { exponent } } => format!("orlicz:power:{exponent}"),
        NormSpec::OrliczLux { .. } => return None,
        NormSpec::IntersectionMax { parts } => {
            if parts.iter().any(|p| matches!(p, NormSpec::IntersectionMax { .. })) {
                return None;
            }
            let items = parts.iter().map(print).collect::<Option<Vec<_>>>()?;
            format!("max:{}", items.join("|"))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn documented_examples() {
        assert_eq!(parse("lp:2").unwrap(), NormSpec::Lp { p: 2.0 });
        assert_eq!(parse("lorentz:3,1").unwrap(), NormSpec::LorentzPq { p: 3.0, q: 1.0 });
        assert_eq!(parse("lorentz:2,inf").unwrap(), NormSpec::LorentzPInf { p: 2.0 });
        assert_eq!(
            parse("weak-marc:power:0.5").unwrap(),
            NormSpec::WeakMarcinkiewicz { phi: FundamentalFn::power(0.5) }
        );
        assert_eq!(
            parse("marc-p-loc:2:power:0.25@3").unwrap(),
            NormSpec::MarcinkiewiczPLoc { phi: FundamentalFn::power(0.25).capped(3.0), p: 2.0 }
        );
        assert!(parse("lp:0.5").is_err());
        assert!(parse("nope:1").is_err());
    }

    fn leaf() -> impl Strategy<Value = String> {
        let x = || (1u32..40).prop_map(|k| format!("{}", k as f64 / 8.0 + 1.0));
        let a = || (1u32..16).prop_map(|k| format!("{}", k as f64 / 16.0));
        let phi = prop_oneof![
            a().prop_map(|a| format!("power:{a}")),
            (a(), -3i32..4).prop_map(|(a, b)| format!("powerlog:{a},{b}")),
            x().prop_map(|c| format!("const:{c}")),
            (a(), x()).prop_map(|(a, c)| format!("power:{a}@{c}")),
        ];
        (0usize..9, x(), x(), phi).prop_map(|(k, p, q, phi)| match k {
            0 => format!("lp:{p}"),
            1 => format!("lorentz:{p},{q}"),
            2 => format!("lorentz:{p},inf"),
            3 => format!("lambda:{phi}"),
            4 => format!("lambda-q:{q}:{phi}"),
            5 => format!("marc:{phi}"),
            6 => format!("weak-marc:{phi}"),
            7 => format!("marc-p:{p}:{phi}"),
            _ => format!("marc-p-loc:{p}:{phi}"),
        })
    }

    proptest! {
        #[test]
        fn round_trips(parts in prop::collection::vec(leaf(), 1..4)) {
            let text = if parts.len() == 1 { parts[0].clone() } else { format!("max:{}", parts.join("|")) };
            let spec = parse(&text).unwrap();
            prop_assert_eq!(print(&spec).unwrap(), text.clone());
            let json = serde_json::to_string(&spec).unwrap();
            prop_assert_eq!(serde_json::from_str::<NormSpec>(&json).unwrap(), spec);
        }
    }
}
