#include "airtemp/synth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "airtemp/core/rng.hpp"
#include "airtemp/io/config_file.hpp"
#include "airtemp/io/grid_io.hpp"

namespace airtemp::synth {

namespace {

// Value noise: random lattice at `scale` spacing, bilinear interpolation,
// min-max normalized to [0, 1].
std::vector<float> smooth01(Rng& rng, int h, int w, int scale) {
    scale = std::max(scale, 2);
    const int gh = h / scale + 3, gw = w / scale + 3;
    std::vector<double> lattice(static_cast<std::size_t>(gh) * gw);
    for (double& v : lattice) v = rng.uniform();
    std::vector<float> out(static_cast<std::size_t>(h) * w);
    double mn = 1e300, mx = -1e300;
    for (int y = 0; y < h; ++y) {
        const double fy = static_cast<double>(y) / scale;
        const int iy = static_cast<int>(fy);
        const double ty = fy - iy;
        for (int x = 0; x < w; ++x) {
            const double fx = static_cast<double>(x) / scale;
            const int ix = static_cast<int>(fx);
            const double tx = fx - ix;
            const double v00 = lattice[static_cast<std::size_t>(iy) * gw + ix];
            const double v01 = lattice[static_cast<std::size_t>(iy) * gw + ix + 1];
            const double v10 = lattice[static_cast<std::size_t>(iy + 1) * gw + ix];
            const double v11 = lattice[static_cast<std::size_t>(iy + 1) * gw + ix + 1];
            const double v = (1 - ty) * ((1 - tx) * v00 + tx * v01) + ty * ((1 - tx) * v10 + tx * v11);
            out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(v);
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
    }
    const double span = mx - mn;
    for (float& v : out) {
        v = span > 0 ? static_cast<float>((v - mn) / span) : 0.5f;
    }
    return out;
}

std::vector<float> ranged_field(Rng& rng, int h, int w, int scale, const Range& r) {
    std::vector<float> f = smooth01(rng, h, w, scale);
    for (float& v : f) v = static_cast<float>(r.lo + (r.hi - r.lo) * v);
    return f;
}

int coarse_dim(int n, int factor) {
    return (n + factor - 1) / factor;
}

} // namespace

void SceneSpec::validate() const {
    if (h <= 0 || w <= 0) throw SpecError("scene dims must be positive");
    if (n_doy < 2) throw SpecError("scene n_doy must be at least 2");
    if (hours.empty()) throw SpecError("scene needs at least one hour");
    for (int hr : hours) {
        if (hr < 0 || hr > 23) throw SpecError("scene hour out of range: " + std::to_string(hr));
    }
    if (cloud_fraction < 0.0 || cloud_fraction >= 1.0) {
        throw SpecError("cloud_fraction must be in [0,1), got " + std::to_string(cloud_fraction));
    }
    if (noise_sigma < 0.0 || station_noise_sigma < 0.0) throw SpecError("noise sigma must be >= 0");
    if (texture_amplitude < 0.0) throw SpecError("texture_amplitude must be >= 0");
    if (n_stations < 0 || n_stations > h * w) {
        throw SpecError("n_stations must be in [0, H*W]");
    }
    if (cloud_blob_scale < 1) throw SpecError("cloud_blob_scale must be >= 1");
    if (coarse_factor < 1) throw SpecError("coarse_factor must be >= 1");
    if (air_transform_truth != "default" && air_transform_truth != "affine") {
        throw SpecError("unknown air_transform_truth '" + air_transform_truth + "'");
    }
    auto bounded = [](const Range& r) { return std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi; };
    if (!bounded(t0_truth) || !bounded(a_truth) || !bounded(phi_truth) || !bounded(rho_truth)) {
        throw SpecError("truth parameter ranges must be bounded with lo <= hi");
    }
}

double air_transform_truth_eval(const std::string& name, double t_surf, double elevation_m, int hour) {
    if (name == "default") {
        return 0.7 * t_surf - 0.002 * elevation_m + 1.5 * std::sin(2.0 * M_PI * hour / 24.0) + 2.0;
    }
    if (name == "affine") {
        return 0.8 * t_surf + 3.0;
    }
    throw SpecError("unknown air_transform_truth '" + name + "'");
}

const HourScene& SyntheticScene::hour_scene(int hour) const {
    for (const HourScene& hs : hours) {
        if (hs.hour == hour) return hs;
    }
    throw DataError("scene has no hour " + std::to_string(hour));
}

SyntheticScene generate_scene(const SceneSpec& spec) {
    spec.validate();
    SyntheticScene scene;
    scene.spec = spec;
    const int h = spec.h, w = spec.w, n_doy = spec.n_doy;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    Rng root(spec.seed);

    // Static surface properties. The reflectance bands carry the spatial
    // signature the texture is built from; a texture-free scene is
    // spectrally flat so the residual head has no spatial signal to read.
    {
        Rng rng = root.fork("reflectance");
        scene.reflectance = GridStack(5, h, w);
        Rng shared_rng = root.fork("reflectance.shared");
        const std::vector<float> shared = smooth01(shared_rng, h, w, 6);
        const float variation =
            static_cast<float>(std::clamp(spec.texture_amplitude, 0.0, 1.0)) * 0.24f;
        for (int b = 0; b < 5; ++b) {
            const std::vector<float> own = smooth01(rng, h, w, 5);
            for (std::size_t i = 0; i < plane; ++i) {
                const float v = 0.08f + 0.09f * static_cast<float>(b) +
                                variation * (0.55f * own[i] + 0.45f * shared[i]);
                scene.reflectance.data[static_cast<std::size_t>(b) * plane + i] =
                    std::clamp(v, 0.0f, 1.0f);
            }
        }
    }
    {
        Rng rng = root.fork("elevation");
        scene.elevation = GridStack(1, h, w);
        const std::vector<float> e = smooth01(rng, h, w, std::max(4, h / 3));
        for (std::size_t i = 0; i < plane; ++i) scene.elevation.data[i] = 2000.0f * e[i];
        scene.slope = GridStack(1, h, w);
        const double cell_m = 111000.0 * spec.dlat; // meters per pixel
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const int ym = std::max(0, y - 1), yp = std::min(h - 1, y + 1);
                const int xm = std::max(0, x - 1), xp = std::min(w - 1, x + 1);
                const double dzdy = (scene.elevation.at(0, yp, x) - scene.elevation.at(0, ym, x)) /
                                    (cell_m * (yp - ym));
                const double dzdx = (scene.elevation.at(0, y, xp) - scene.elevation.at(0, y, xm)) /
                                    (cell_m * (xp - xm));
                scene.slope.at(0, y, x) =
                    static_cast<float>(std::atan(std::sqrt(dzdx * dzdx + dzdy * dzdy)) * 180.0 / M_PI);
            }
        }
    }

    // Reflectance-tied spatial texture, standardized then scaled.
    std::vector<float> texture(plane, 0.f);
    if (spec.texture_amplitude > 0.0) {
        const float wts[5] = {2.0f, 1.0f, -1.5f, 0.8f, -0.6f};
        double mean = 0;
        for (std::size_t i = 0; i < plane; ++i) {
            float v = 0.f;
            for (int b = 0; b < 5; ++b) {
                v += wts[b] * scene.reflectance.data[static_cast<std::size_t>(b) * plane + i];
            }
            texture[i] = v;
            mean += v;
        }
        mean /= static_cast<double>(plane);
        double var = 0;
        for (float v : texture) var += (v - mean) * (v - mean);
        var /= static_cast<double>(plane);
        const double sd = std::sqrt(std::max(var, 1e-12));
        for (float& v : texture) {
            v = static_cast<float>(spec.texture_amplitude * ((v - mean) / sd));
        }
    }

    // Shared annual-cycle truth fields; per-hour T0 gets a diurnal offset.
    Rng atc_rng = root.fork("atc");
    const std::vector<float> t0_base = ranged_field(atc_rng, h, w, std::max(4, h / 4), spec.t0_truth);
    const std::vector<float> a_base = ranged_field(atc_rng, h, w, std::max(4, h / 4), spec.a_truth);
    const std::vector<float> phi_base = ranged_field(atc_rng, h, w, std::max(4, h / 4), spec.phi_truth);
    const std::vector<float> rho_base = ranged_field(atc_rng, h, w, std::max(4, h / 4), spec.rho_truth);

    const int hc = coarse_dim(h, spec.coarse_factor), wc = coarse_dim(w, spec.coarse_factor);
    const std::size_t cplane = static_cast<std::size_t>(hc) * wc;

    for (int hour : spec.hours) {
        HourScene hs;
        hs.hour = hour;
        hs.atc_truth = atc::AtcParamField(h, w, n_doy);
        const float t0_offset = static_cast<float>(6.0 * std::sin(2.0 * M_PI * (hour - 9) / 24.0));
        for (std::size_t i = 0; i < plane; ++i) {
            hs.atc_truth.t0[i] = t0_base[i] + t0_offset;
            hs.atc_truth.a[i] = a_base[i];
            hs.atc_truth.phi[i] = phi_base[i];
            hs.atc_truth.rho[i] = rho_base[i];
        }

        // Coarse-cell weather anomalies, AR(1) over days.
        Rng wrng = root.fork("weather.h" + std::to_string(hour));
        std::vector<double> weather(static_cast<std::size_t>(n_doy) * cplane);
        const double sigma_w = 3.0, ar = 0.7;
        const double innov = sigma_w * std::sqrt(1.0 - ar * ar);
        for (std::size_t cidx = 0; cidx < cplane; ++cidx) weather[cidx] = wrng.normal(0.0, sigma_w);
        for (int d = 1; d < n_doy; ++d) {
            for (std::size_t cidx = 0; cidx < cplane; ++cidx) {
                weather[static_cast<std::size_t>(d) * cplane + cidx] =
                    ar * weather[static_cast<std::size_t>(d - 1) * cplane + cidx] +
                    wrng.normal(0.0, innov);
            }
        }

        hs.truth_surf = GridStack(n_doy, h, w);
        hs.coarse = GridStack(n_doy, h, w);
        hs.observed_surf = GridStack(n_doy, h, w);
        Rng noise_rng = root.fork("noise.h" + std::to_string(hour));
        Rng cloud_rng = root.fork("cloud.h" + std::to_string(hour));

        std::vector<double> atc_day(plane);
        std::vector<double> cell_sum(cplane);
        std::vector<int> cell_count(cplane);
        for (int d = 0; d < n_doy; ++d) {
            const double s_d = std::sin(4.0 * M_PI * d / static_cast<double>(n_doy));
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    atc_day[static_cast<std::size_t>(y) * w + x] = atc::atc_eval(hs.atc_truth, y, x, d);
                }
            }
            // Coarse field: block-mean of the smooth cycle plus weather,
            // then nearest-neighbor upsample. The fine-scale texture stays
            // out: a 0.1-degree reanalysis does not resolve 2 km land-cover
            // patterns, and that unresolved part is what the residual head
            // is for.
            std::fill(cell_sum.begin(), cell_sum.end(), 0.0);
            std::fill(cell_count.begin(), cell_count.end(), 0);
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const std::size_t cidx =
                        static_cast<std::size_t>(y / spec.coarse_factor) * wc + x / spec.coarse_factor;
                    cell_sum[cidx] += atc_day[static_cast<std::size_t>(y) * w + x];
                    ++cell_count[cidx];
                }
            }
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    const std::size_t cidx =
                        static_cast<std::size_t>(y / spec.coarse_factor) * wc + x / spec.coarse_factor;
                    const double coarse_v = cell_sum[cidx] / cell_count[cidx] +
                                            weather[static_cast<std::size_t>(d) * cplane + cidx];
                    hs.coarse.at(d, y, x) = static_cast<float>(coarse_v);
                    hs.truth_surf.at(d, y, x) = static_cast<float>(
                        atc_day[i] + static_cast<double>(hs.atc_truth.rho[i]) * coarse_v +
                        texture[i] * s_d);
                }
            }

            // Cloud mask: thresholded smoothed noise at the exact per-day
            // quantile.
            if (spec.cloud_fraction > 0.0) {
                const std::vector<float> field = smooth01(cloud_rng, h, w, spec.cloud_blob_scale);
                std::vector<float> sorted(field);
                const auto kth = static_cast<std::size_t>(spec.cloud_fraction * static_cast<double>(plane));
                std::nth_element(sorted.begin(), sorted.begin() + kth, sorted.end());
                const float q = sorted[kth];
                for (std::size_t i = 0; i < plane; ++i) {
                    hs.observed_surf.mask[static_cast<std::size_t>(d) * plane + i] = field[i] < q ? 0 : 1;
                }
            }
            for (std::size_t i = 0; i < plane; ++i) {
                const std::size_t gi = static_cast<std::size_t>(d) * plane + i;
                if (hs.observed_surf.mask[gi]) {
                    double v = hs.truth_surf.data[gi];
                    if (spec.noise_sigma > 0.0) v += noise_rng.normal(0.0, spec.noise_sigma);
                    hs.observed_surf.data[gi] = static_cast<float>(v);
                } else {
                    hs.observed_surf.data[gi] = 0.f;
                }
            }
        }

        // Hourly reanalysis covariates at coarse resolution.
        Rng rrng = root.fork("reanalysis.h" + std::to_string(hour));
        struct VarSpec {
            const char* name;
            double base, amp;
        };
        const VarSpec vars[5] = {{"blh", 300.0, 1400.0},
                                 {"tcw", 8.0, 30.0},
                                 {"shf", -50.0, 300.0},
                                 {"u10", -8.0, 16.0},
                                 {"v10", -8.0, 16.0}};
        for (const VarSpec& vs : vars) {
            GridStack g(n_doy, hc, wc);
            std::vector<double> level(cplane);
            for (std::size_t i = 0; i < cplane; ++i) level[i] = rrng.uniform();
            for (int d = 0; d < n_doy; ++d) {
                for (std::size_t i = 0; i < cplane; ++i) {
                    level[i] = std::clamp(0.9 * level[i] + 0.1 * rrng.uniform(), 0.0, 1.0);
                    g.data[static_cast<std::size_t>(d) * cplane + i] =
                        static_cast<float>(vs.base + vs.amp * level[i]);
                }
            }
            hs.reanalysis[vs.name] = std::move(g);
        }

        scene.hours.push_back(std::move(hs));
    }

    // Stations on distinct pixels.
    if (spec.n_stations > 0) {
        Rng srng = root.fork("stations");
        std::vector<std::int64_t> pixels(plane);
        std::iota(pixels.begin(), pixels.end(), 0);
        for (std::size_t i = 0; i + 1 < pixels.size(); ++i) {
            const auto j = i + static_cast<std::size_t>(srng.next_u64() % (pixels.size() - i));
            std::swap(pixels[i], pixels[j]);
        }
        pixels.resize(static_cast<std::size_t>(spec.n_stations));
        std::sort(pixels.begin(), pixels.end());
        Rng obs_rng = root.fork("station_noise");
        for (std::size_t s = 0; s < pixels.size(); ++s) {
            const int y = static_cast<int>(pixels[s] / w);
            const int x = static_cast<int>(pixels[s] % w);
            scene.station_pixels.emplace_back(y, x);
            char id[16];
            std::snprintf(id, sizeof(id), "ST%03zu", s + 1);
            const double elev = scene.elevation.at(0, y, x);
            for (int d = 0; d < n_doy; ++d) {
                for (const HourScene& hs : scene.hours) {
                    StationRecord rec;
                    rec.station_id = id;
                    rec.lat = spec.lat0 + y * spec.dlat;
                    rec.lon = spec.lon0 + x * spec.dlon;
                    rec.elevation_m = elev;
                    rec.timestamp = from_day_of_year(spec.year, d, hs.hour);
                    double t_air = air_transform_truth_eval(spec.air_transform_truth,
                                                            hs.truth_surf.at(d, y, x), elev, hs.hour);
                    if (spec.station_noise_sigma > 0.0) {
                        t_air += obs_rng.normal(0.0, spec.station_noise_sigma);
                    }
                    rec.t_air_c = t_air;
                    scene.stations.push_back(std::move(rec));
                }
            }
        }
    }

    return scene;
}

OracleStats oracle_eval(const HourScene& hs, const GridStack& output) {
    if (!output.same_shape(hs.truth_surf)) {
        throw DimensionError("oracle_eval: output shape does not match truth");
    }
    OracleStats st;
    double sse_o = 0, sae_o = 0, sse_m = 0, sae_m = 0;
    for (std::size_t i = 0; i < output.data.size(); ++i) {
        const double err = static_cast<double>(output.data[i]) - hs.truth_surf.data[i];
        if (hs.observed_surf.mask[i]) {
            sse_o += err * err;
            sae_o += std::fabs(err);
            ++st.n_observed;
        } else {
            sse_m += err * err;
            sae_m += std::fabs(err);
            ++st.n_masked;
        }
    }
    if (st.n_observed > 0) {
        st.rmse_observed = std::sqrt(sse_o / static_cast<double>(st.n_observed));
        st.mae_observed = sae_o / static_cast<double>(st.n_observed);
    }
    if (st.n_masked > 0) {
        st.rmse_masked = std::sqrt(sse_m / static_cast<double>(st.n_masked));
        st.mae_masked = sae_m / static_cast<double>(st.n_masked);
    }
    return st;
}

AtcRecoveryStats compare_atc(const atc::AtcParamField& truth, const atc::AtcParamField& fitted,
                             double tol_t0, double tol_a, double tol_phi) {
    if (truth.h != fitted.h || truth.w != fitted.w) {
        throw DimensionError("compare_atc: field shapes differ");
    }
    auto canonical = [](double a, double phi) {
        if (a < 0) {
            a = -a;
            phi += M_PI;
        }
        phi = std::remainder(phi, 2.0 * M_PI);
        return std::make_pair(a, phi);
    };
    const std::size_t n = static_cast<std::size_t>(truth.h) * truth.w;
    std::size_t ok_t0 = 0, ok_a = 0, ok_phi = 0;
    AtcRecoveryStats st;
    for (std::size_t i = 0; i < n; ++i) {
        const auto [ta, tphi] = canonical(truth.a[i], truth.phi[i]);
        const auto [fa, fphi] = canonical(fitted.a[i], fitted.phi[i]);
        const double e_t0 = std::fabs(static_cast<double>(fitted.t0[i]) - truth.t0[i]);
        const double e_a = std::fabs(fa - ta);
        const double e_phi = std::fabs(std::remainder(fphi - tphi, 2.0 * M_PI));
        ok_t0 += e_t0 <= tol_t0;
        ok_a += e_a <= tol_a;
        ok_phi += e_phi <= tol_phi;
        st.max_t0_err = std::max(st.max_t0_err, e_t0);
        st.max_a_err = std::max(st.max_a_err, e_a);
        st.max_phi_err = std::max(st.max_phi_err, e_phi);
    }
    st.frac_t0_ok = static_cast<double>(ok_t0) / static_cast<double>(n);
    st.frac_a_ok = static_cast<double>(ok_a) / static_cast<double>(n);
    st.frac_phi_ok = static_cast<double>(ok_phi) / static_cast<double>(n);
    return st;
}

namespace {

std::string hour_tag(int hour) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "h%02d", hour);
    return buf;
}

GridStack atc_to_grid(const atc::AtcParamField& f) {
    GridStack g(4, f.h, f.w);
    const std::size_t plane = static_cast<std::size_t>(f.h) * f.w;
    std::copy(f.t0.begin(), f.t0.end(), g.data.begin());
    std::copy(f.a.begin(), f.a.end(), g.data.begin() + plane);
    std::copy(f.phi.begin(), f.phi.end(), g.data.begin() + 2 * plane);
    std::copy(f.rho.begin(), f.rho.end(), g.data.begin() + 3 * plane);
    return g;
}

atc::AtcParamField grid_to_atc(const GridStack& g, int n_doy) {
    if (g.c != 4) throw DataError("ATC truth grid must have 4 channels");
    atc::AtcParamField f(g.h, g.w, n_doy);
    const std::size_t plane = static_cast<std::size_t>(g.h) * g.w;
    std::copy(g.data.begin(), g.data.begin() + plane, f.t0.begin());
    std::copy(g.data.begin() + plane, g.data.begin() + 2 * plane, f.a.begin());
    std::copy(g.data.begin() + 2 * plane, g.data.begin() + 3 * plane, f.phi.begin());
    std::copy(g.data.begin() + 3 * plane, g.data.end(), f.rho.begin());
    return f;
}

} // namespace

void write_scene(const SyntheticScene& scene, const std::string& dir) {
    const SceneSpec& sp = scene.spec;
    io::KeyValueFile manifest;
    manifest.set_int("format_version", 1);
    manifest.set_int("h", sp.h);
    manifest.set_int("w", sp.w);
    manifest.set_int("n_doy", sp.n_doy);
    manifest.set_int("year", sp.year);
    std::string hours_csv;
    for (std::size_t i = 0; i < sp.hours.size(); ++i) {
        if (i) hours_csv += ",";
        hours_csv += std::to_string(sp.hours[i]);
    }
    manifest.set("hours", hours_csv);
    manifest.set_int("seed", static_cast<std::int64_t>(sp.seed));
    manifest.set_int("coarse_factor", sp.coarse_factor);
    manifest.set_double("lat0", sp.lat0);
    manifest.set_double("lon0", sp.lon0);
    manifest.set_double("dlat", sp.dlat);
    manifest.set_double("dlon", sp.dlon);
    manifest.set("air_transform", sp.air_transform_truth);
    manifest.set_double("station_noise_sigma", sp.station_noise_sigma);
    manifest.set_double("texture_amplitude", sp.texture_amplitude);
    manifest.set_double("noise_sigma", sp.noise_sigma);
    manifest.set_double("cloud_fraction", sp.cloud_fraction);
    manifest.set_int("cloud_blob_scale", sp.cloud_blob_scale);
    manifest.set_int("n_stations", sp.n_stations);
    manifest.save(dir + "/manifest.txt");

    io::write_grid(scene.reflectance, dir + "/reflectance.tgrd");
    io::write_grid(scene.elevation, dir + "/elevation.tgrd");
    io::write_grid(scene.slope, dir + "/slope.tgrd");
    for (const HourScene& hs : scene.hours) {
        const std::string tag = hour_tag(hs.hour);
        io::write_grid(hs.observed_surf, dir + "/observed_" + tag + ".tgrd");
        io::write_grid(hs.coarse, dir + "/coarse_" + tag + ".tgrd");
        io::write_grid(hs.truth_surf, dir + "/truth_" + tag + ".tgrd");
        io::write_grid(atc_to_grid(hs.atc_truth), dir + "/truth_atc_" + tag + ".tgrd");
        for (const auto& [var, g] : hs.reanalysis) {
            io::write_grid(g, dir + "/reanalysis_" + var + "_" + tag + ".tgrd");
        }
    }
    io::write_stations(scene.stations, dir + "/stations.csv");
}

SceneBundle load_scene(const std::string& dir, bool load_truth) {
    const io::KeyValueFile manifest = io::KeyValueFile::load(dir + "/manifest.txt");
    SceneBundle b;
    b.h = static_cast<int>(manifest.get_int("h"));
    b.w = static_cast<int>(manifest.get_int("w"));
    b.n_doy = static_cast<int>(manifest.get_int("n_doy"));
    b.year = static_cast<int>(manifest.get_int("year"));
    b.coarse_factor = static_cast<int>(manifest.get_int("coarse_factor"));
    b.lat0 = manifest.get_double("lat0");
    b.lon0 = manifest.get_double("lon0");
    b.dlat = manifest.get_double("dlat");
    b.dlon = manifest.get_double("dlon");
    b.air_transform = manifest.get_or("air_transform", "default");
    {
        const std::string hours_csv = manifest.get("hours");
        std::size_t pos = 0;
        while (pos < hours_csv.size()) {
            std::size_t comma = hours_csv.find(',', pos);
            if (comma == std::string::npos) comma = hours_csv.size();
            b.hours.push_back(std::stoi(hours_csv.substr(pos, comma - pos)));
            pos = comma + 1;
        }
    }
    b.reflectance = io::read_grid(dir + "/reflectance.tgrd");
    b.elevation = io::read_grid(dir + "/elevation.tgrd");
    b.slope = io::read_grid(dir + "/slope.tgrd");
    for (int hour : b.hours) {
        const std::string tag = hour_tag(hour);
        b.observed[hour] = io::read_grid(dir + "/observed_" + tag + ".tgrd");
        b.coarse[hour] = io::read_grid(dir + "/coarse_" + tag + ".tgrd");
        for (const std::string& var : reanalysis_vars()) {
            b.reanalysis[hour][var] = io::read_grid(dir + "/reanalysis_" + var + "_" + tag + ".tgrd");
        }
        if (load_truth) {
            b.truth_surf[hour] = io::read_grid(dir + "/truth_" + tag + ".tgrd");
            b.truth_atc[hour] = grid_to_atc(io::read_grid(dir + "/truth_atc_" + tag + ".tgrd"), b.n_doy);
        }
    }
    b.has_truth = load_truth;
    b.stations = io::read_stations(dir + "/stations.csv");
    return b;
}

} // namespace airtemp::synth
