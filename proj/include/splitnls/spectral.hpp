#pragma once

#include "splitnls/field.hpp"

namespace splitnls {

// Unitary DFT pair (1/sqrt(N) scaling on both directions), so Parseval holds
// exactly and forward followed by inverse is the identity up to rounding.
// The forward sign convention is fhat(k) ~ sum_x f(x) e^{-i k.x}.
Field forward_dft(const Field& f);
Field inverse_dft(const Field& f);

// Component j of the spectral derivative: inverse transform of i*k_j*fhat.
// Input may be tagged either way; output components are physical.
std::vector<Field> gradient(const Field& f);

// Discrete Lebesgue norm with cell-volume weight:
//   (cellvol * sum |f_i|^r)^(1/r),   r = inf gives max_i |f_i|.
// r < 1 is a domain error. Spectral input is only meaningful for r = 2
// (Parseval); other r on a spectral field is an error.
double lp_norm(const Field& f, double r);

// (cellvol * sum (1+|k|^2)^s |fhat_k|^2)^(1/2); s < 0 is a domain error.
// Accepts either tag and transforms as needed.
double sobolev_norm(const Field& f, double s);

// lp_norm(f, r) + sum_j lp_norm(d_j f, r).
double w1r_norm(const Field& f, double r);

// L2 distance between two fields on the same grid with the same tag.
double l2_distance(const Field& a, const Field& b);

}  // namespace splitnls
