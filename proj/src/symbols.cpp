#include "schwarz/symbols.hpp"

#include <sstream>

namespace schwarz {

namespace {

bool finite(cplx z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

}  // namespace

cplx dtn_bounded(cplx k, const Medium& m, Side side, double interface_pos,
                 QP outer) {
  const double w =
      side == Side::Right ? 1.0 - interface_pos : interface_pos;
  if (w < 0.0) throw ConfigError("dtn_bounded: interface outside the domain");
  const cplx s = dtn_unbounded(k, m);
  const cplx z = s * w;
  cplx num, den;
  if (std::abs(z) < 1e-4) {
    // series in z = s*w; the exterior solve is analytic in s^2 here
    const cplx z2 = z * z;
    num = outer.q * s * s * w * (1.0 + z2 / 6.0) + outer.p * (1.0 + z2 / 2.0);
    den = outer.q * (1.0 + z2 / 2.0) + outer.p * w * (1.0 + z2 / 6.0);
  } else {
    const cplx E = std::exp(-2.0 * z);  // Re z >= 0, so |E| <= 1
    num = s * (outer.q * s * (1.0 - E) + outer.p * (1.0 + E));
    den = outer.q * s * (1.0 + E) + outer.p * (1.0 - E);
  }
  if (den == 0.0 || !finite(num) || !finite(den))
    throw PoleError("dtn_bounded: resonance at this frequency");
  const cplx sigma = num / den;
  if (!finite(sigma)) throw PoleError("dtn_bounded: non-finite symbol");
  return sigma;
}

cplx pml_dtn(cplx xi, const Medium& m, const PmlSpec& pml) {
  if (pml.D < 0.0) throw ConfigError("pml_dtn: negative width");
  const cplx s = dtn_unbounded(xi, m);
  // complex stretch: total path 2D + gamma*D (diffusion, real stretch)
  // or 2D - i*gamma*D (waves); eta == 0 uses the diffusion form
  const cplx c = m.wave() ? cplx(2.0, -pml.gamma) : cplx(2.0 + pml.gamma, 0.0);
  const cplx u = c * pml.D * s;
  cplx S;
  if (std::abs(u) < 1e-6) {
    // E = exp(-u) ~ 1 - u + u^2/2 - u^3/6
    const cplx one_minus_E = u * (1.0 - u / 2.0 + u * u / 6.0);
    const cplx one_plus_E = 2.0 - one_minus_E;
    if (pml.termination == Termination::Dirichlet) {
      if (one_minus_E == 0.0)
        throw PoleError("pml_dtn: Dirichlet termination with zero layer");
      S = s * one_plus_E / one_minus_E;
    } else {
      S = s * one_minus_E / one_plus_E;
    }
  } else {
    const cplx E = std::exp(-u);
    const cplx den = pml.termination == Termination::Dirichlet ? 1.0 - E
                                                               : 1.0 + E;
    const cplx num = pml.termination == Termination::Dirichlet ? 1.0 + E
                                                               : 1.0 - E;
    if (den == 0.0) throw PoleError("pml_dtn: layer resonance");
    S = s * num / den;
  }
  if (!finite(S)) throw PoleError("pml_dtn: non-finite symbol");
  return S;
}

cplx reflection_coefficient(cplx sigma, cplx k, const Medium& m) {
  const cplx s = dtn_unbounded(k, m);
  const cplx den = sigma + s;
  if (den == 0.0) throw PoleError("reflection_coefficient: sigma == -s");
  const cplx R = (sigma - s) / den;
  if (!finite(R)) throw PoleError("reflection_coefficient: non-finite");
  return R;
}

QP SymbolFn::eval(cplx k, const Medium& m) const {
  switch (kind_) {
    case SymbolKind::Dirichlet:
      return {cplx(0.0), cplx(1.0)};
    case SymbolKind::Neumann:
      return {cplx(1.0), cplx(0.0)};
    case SymbolKind::Robin:
      return {cplx(1.0), p_};
    case SymbolKind::Taylor0:
      return {cplx(1.0), sqrt_branch(cplx(effective(m).eta))};
    case SymbolKind::DtNUnbounded:
      return {cplx(1.0), dtn_unbounded(k, effective(m))};
    case SymbolKind::DtNBounded:
      return {cplx(1.0), dtn_bounded(k, effective(m), side_, pos_, outer_)};
    case SymbolKind::Pml:
      return {cplx(1.0), pml_dtn(k, effective(m), pml_)};
  }
  throw ConfigError("SymbolFn: unknown kind");
}

std::string SymbolFn::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case SymbolKind::Dirichlet:
      os << "dirichlet";
      break;
    case SymbolKind::Neumann:
      os << "neumann";
      break;
    case SymbolKind::Robin:
      os << "robin:" << p_.real();
      if (p_.imag() != 0.0) os << (p_.imag() > 0 ? "+" : "") << p_.imag() << "i";
      break;
    case SymbolKind::Taylor0:
      os << "taylor0";
      break;
    case SymbolKind::DtNUnbounded:
      os << "transparent";
      break;
    case SymbolKind::DtNBounded:
      os << "dtn_bounded:" << (side_ == Side::Right ? "right" : "left") << ","
         << pos_;
      break;
    case SymbolKind::Pml:
      os << "pml:" << pml_.D << "," << pml_.gamma << ","
         << (pml_.termination == Termination::Dirichlet ? "dirichlet"
                                                        : "neumann");
      break;
  }
  if (has_override_) os << ",eta=" << eta_override_;
  return os.str();
}

}  // namespace schwarz
