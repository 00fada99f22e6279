use serde::{Deserialize, Serialize};

use crate::arrival::InterarrivalDist;
use crate::error::{invalid, Error, Result};
use crate::valuation::ValuationDist;

/// A problem instance: `servers` identical exponential servers of rate
/// `service_rate`, fed by a renewal stream of customers with random
/// valuations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct SystemSpec {
    pub servers: usize,
    pub service_rate: f64,
    pub arrival: InterarrivalDist,
    pub valuation: ValuationDist,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    servers: usize,
    service_rate: f64,
    arrival: InterarrivalDist,
    valuation: ValuationDist,
}

impl TryFrom<RawSpec> for SystemSpec {
    type Error = Error;

    fn try_from(r: RawSpec) -> Result<Self> {
        SystemSpec::new(r.servers, r.service_rate, r.arrival, r.valuation)
    }
}

impl SystemSpec {
    pub fn new(
        servers: usize,
        service_rate: f64,
        arrival: InterarrivalDist,
        valuation: ValuationDist,
    ) -> Result<Self> {
        if servers == 0 {
            return Err(invalid("servers", "need at least one server"));
        }
        if !(service_rate.is_finite() && service_rate > 0.0) {
            return Err(invalid("service_rate", "must be finite and > 0"));
        }
        Ok(Self {
            servers,
            service_rate,
            arrival,
            valuation,
        })
    }

    /// Poisson arrivals of rate `lambda`.
    pub fn poisson(servers: usize, lambda: f64, mu: f64, valuation: ValuationDist) -> Result<Self> {
        Self::new(servers, mu, InterarrivalDist::exponential(lambda)?, valuation)
    }

    pub fn arrival_rate(&self) -> f64 {
        self.arrival.rate()
    }

    /// Offered load `lambda / mu`.
    pub fn load(&self) -> f64 {
        self.arrival_rate() / self.service_rate
    }

    pub fn is_poisson(&self) -> bool {
        self.arrival.is_exponential()
    }

    pub fn with_servers(&self, servers: usize) -> Result<Self> {
        Self::new(servers, self.service_rate, self.arrival.clone(), self.valuation.clone())
    }

    pub fn with_service_rate(&self, mu: f64) -> Result<Self> {
        Self::new(self.servers, mu, self.arrival.clone(), self.valuation.clone())
    }

    /// Same arrival family rescaled to rate `lambda`.
    pub fn with_arrival_rate(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.servers,
            self.service_rate,
            self.arrival.with_rate(lambda)?,
            self.valuation.clone(),
        )
    }
}

/// Admission prices `p_0, ..., p_{K-1}` indexed by the number of busy
/// servers. State `K` implicitly carries an infinite price. An infinite entry
/// closes admission in that state.
///
/// Serialized as a JSON array in which `null` stands for `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceVector(Vec<f64>);

impl PriceVector {
    pub fn new(prices: Vec<f64>) -> Result<Self> {
        if prices.is_empty() {
            return Err(invalid("prices", "need at least one price"));
        }
        if prices.iter().any(|p| p.is_nan() || *p < 0.0) {
            return Err(invalid("prices", "prices must be nonnegative"));
        }
        Ok(Self(prices))
    }

    pub fn uniform(k: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; k])
    }

    /// Number of states with a posted price, i.e. `K`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Price in state `k`; `+inf` for `k >= K`.
    pub fn price(&self, k: usize) -> f64 {
        self.0.get(k).copied().unwrap_or(f64::INFINITY)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn check_servers(&self, servers: usize) -> Result<()> {
        if self.0.len() != servers {
            return Err(invalid(
                "prices",
                format!("expected {servers} prices, got {}", self.0.len()),
            ));
        }
        Ok(())
    }
}

impl Serialize for PriceVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let wire: Vec<Option<f64>> = self.0.iter().map(|&p| p.is_finite().then_some(p)).collect();
        wire.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PriceVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = Vec::<Option<f64>>::deserialize(d)?;
        PriceVector::new(wire.into_iter().map(|p| p.unwrap_or(f64::INFINITY)).collect())
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn price_vector_pads_with_infinity() {
        let p = PriceVector::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(p.price(1), 2.0);
        assert_eq!(p.price(2), f64::INFINITY);
        assert!(PriceVector::new(vec![-1.0]).is_err());
        assert!(PriceVector::new(vec![]).is_err());
    }

    #[test]
    fn price_vector_json_uses_null_for_infinity() {
        let p = PriceVector::new(vec![1.5, f64::INFINITY]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[1.5,null]");
        assert_eq!(serde_json::from_str::<PriceVector>(&s).unwrap(), p);
    }

    #[test]
    fn spec_json_round_trip() {
        let json = r#"{"servers":5,"service_rate":2.0,
            "arrival":{"kind":"exponential","rate":25.0},
            "valuation":{"kind":"exponential","beta":1.0}}"#;
        let spec: SystemSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.servers, 5);
        assert_eq!(spec.arrival_rate(), 25.0);
        assert!(spec.is_poisson());
        let back: SystemSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<SystemSpec>(&json.replace("\"servers\":5", "\"servers\":0"))
            .is_err());
    }
}
