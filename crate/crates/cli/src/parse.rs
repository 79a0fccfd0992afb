//! Flag values: complex vectors written as `a+bi,c,-di`.

use complex_geodesics::C64;

pub fn complex(s: &str) -> Result<C64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err("empty complex number".into());
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return real(&t).map(|x| C64::new(x, 0.0));
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (real(&body[..k])?, imag(&body[k..])?),
        None => (0.0, imag(body)?),
    };
    Ok(C64::new(re, im))
}

fn real(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("bad number '{s}'"))
}

fn imag(s: &str) -> Result<f64, String> {
    match s {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => real(s),
    }
}

/// A whole vector as one flag value.
#[derive(Clone, Debug, PartialEq)]
pub struct CVec(pub Vec<C64>);

pub fn vector(s: &str) -> Result<CVec, String> {
    s.split(',').map(complex).collect::<Result<Vec<_>, _>>().map(CVec).map_err(|e| format!("{e} in vector '{s}'"))
}
