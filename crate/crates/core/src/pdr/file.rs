//! Certificate files (TOML).

use serde::{Deserialize, Serialize};

use super::{DualCertificate, Verification};
use crate::error::{Error, Result};
use crate::poly::{format_polynomial, parse_polynomial, PolyVector};
use crate::problem::VariationalProblem;

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FacetEntry {
    pub facet: String,
    pub poly: String,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VerificationEntry {
    pub radius: f64,
    pub samples_per_variable: usize,
    pub min_f: f64,
    pub min_f_point: Vec<f64>,
    pub min_g: f64,
    pub min_g_point: Vec<f64>,
    pub shift_h: f64,
    pub shift_l: f64,
    pub verified: bool,
    pub caveat: String,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub problem: String,
    pub dim: [usize; 2],
    pub raw_value: f64,
    pub certified_value: f64,
    pub phi: Vec<String>,
    pub eta: Vec<f64>,
    pub h: String,
    #[serde(default)]
    pub l: Vec<FacetEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationEntry>,
}

impl CertificateFile {
    pub fn from_certificate(problem_name: &str, cert: &DualCertificate) -> Self {
        CertificateFile {
            problem: problem_name.to_string(),
            dim: [cert.layout.n, cert.layout.m],
            raw_value: cert.raw_value,
            certified_value: cert.certified_value,
            phi: cert.phi.iter().map(format_polynomial).collect(),
            eta: cert.eta.clone(),
            h: format_polynomial(&cert.h),
            l: cert.l.iter().map(|(f, p)| FacetEntry { facet: f.to_string(), poly: format_polynomial(p) }).collect(),
            verification: cert.verification.as_ref().map(|v| VerificationEntry {
                radius: v.radius,
                samples_per_variable: v.samples,
                min_f: v.min_f,
                min_f_point: v.min_f_point.clone(),
                min_g: v.min_g,
                min_g_point: v.min_g_point.clone(),
                shift_h: v.shift_h,
                shift_l: v.shift_l,
                verified: v.verified,
                caveat: v.caveat.clone(),
            }),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Invalid(e.to_string()))
    }

    /// Rebuilds the certificate for `problem`. The recorded values are kept;
    /// re-certify to trust them.
    pub fn to_certificate(&self, problem: &VariationalProblem<f64>) -> Result<DualCertificate> {
        let layout = problem.layout;
        if self.dim != [layout.n, layout.m] {
            return Err(Error::Dimension(format!(
                "certificate for (n, m) = {:?}, problem has ({}, {})",
                self.dim, layout.n, layout.m
            )));
        }
        let phi = PolyVector::new(
            self.phi.iter().map(|t| parse_polynomial(t, layout)).collect::<Result<Vec<_>>>()?,
        )?;
        let mut cert = DualCertificate::zero(problem);
        cert.phi = phi;
        cert.eta = self.eta.clone();
        cert.h = parse_polynomial(&self.h, layout)?;
        for entry in &self.l {
            let slot = cert
                .l
                .iter_mut()
                .find(|(f, _)| f.to_string() == entry.facet)
                .ok_or_else(|| Error::Parse(format!("unknown facet {:?}", entry.facet)))?;
            slot.1 = parse_polynomial(&entry.poly, layout)?;
        }
        cert.raw_value = self.raw_value;
        cert.certified_value = self.certified_value;
        cert.verification = self.verification.as_ref().map(|v| Verification {
            radius: v.radius,
            samples: v.samples_per_variable,
            min_f: v.min_f,
            min_f_point: v.min_f_point.clone(),
            min_g: v.min_g,
            min_g_point: v.min_g_point.clone(),
            shift_h: v.shift_h,
            shift_l: v.shift_l,
            verified: v.verified,
            caveat: v.caveat.clone(),
        });
        Ok(cert)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{Polynomial, VarLayout};
    use crate::problem::BoxDomain;

    #[test]
    fn round_trip() {
        let l = VarLayout::new(1, 1);
        let omega = BoxDomain::new(vec![(-1.0, 1.0)]).unwrap();
        let problem =
            VariationalProblem::new("t", omega, 1, 2.0, parse_polynomial("z^2", l).unwrap()).with_dirichlet();
        let mut cert = DualCertificate::zero(&problem);
        cert.phi = PolyVector::new(vec![parse_polynomial("-0.125*x*y + 3e-7*y", l).unwrap()]).unwrap();
        cert.h = Polynomial::constant(l, -0.25);
        cert.raw_value = -0.5;
        cert.certified_value = -0.5;
        let text = CertificateFile::from_certificate("t", &cert).to_toml().unwrap();
        let back = CertificateFile::parse(&text).unwrap().to_certificate(&problem).unwrap();
        assert_eq!(back.phi, cert.phi);
        assert_eq!(back.h, cert.h);
        assert_eq!(back.raw_value, -0.5);
    }
}
