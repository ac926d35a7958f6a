//! Shared float formatting for the text file formats.

/// Formats with 17 significant digits, enough for an exact f64 round-trip.
pub(crate) fn f64_17(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn parse_f64(field: &str, what: &str) -> crate::Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| crate::Error::Parse(format!("{what}: cannot parse {field:?} as a number")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn seventeen_digits_round_trip(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back = parse_f64(&f64_17(x), "x").unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
