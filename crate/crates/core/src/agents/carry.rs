use super::sign;
use crate::marketdata::CarryRates;

/// Long when long carry is the better side, short when short carry is,
/// flat when neither side is paid.
pub fn carry_position(rates: CarryRates) -> f64 {
    if rates.long > 0.0 || rates.short > 0.0 {
        sign(rates.long - rates.short)
    } else {
        0.0
    }
}
