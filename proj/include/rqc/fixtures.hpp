#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dyson.hpp"
#include "errors.hpp"

namespace rqc {

// Spot checks of the generated term list against a curated transcription of
// printed second-order expressions. Fixtures live in a data file so every
// reconciliation of a printing error is reviewable line by line.
//
// File grammar (one fixture per line, '#' comments):
//   <tag> family=<U2|U1xU1> amp=<amps> probe=<cls> field=<cls> left=<w> right=<w>
//         sign=<+|-> [status=<ok|typo|nilpotent>] [printed=<amps>] [note="..."]
// with
//   amps:  J(s1,s2,m){[-]D,D}[*]  or  I(s,m){D}[*]xI(s,m){D}[*]   (m: 1 or j)
//   probe: one | eta | beta | gamma | gamma* | pp | mm   (letters as printed)
//   field: astar2 | alpha2 | abs2 | nplus | vac1
//   w:     1 | + | - | +- | -+ | ++ | --
// A status=typo line records the corrected term in its main fields; printed=
// holds the erroneous amp spec as printed (when expressible) and must not
// match anything. Directives: "!flip-sign family=<F> note=..." record a
// documented uniform sign error in one printed family, applied during matching.

struct PrintedTermFixture {
    std::string tag;
    std::string family;  // "U2" or "U1xU1"
    std::string amps;
    std::string printed;  // raw amp spec behind a documented typo
    std::string probe_class;
    std::string field_class;
    std::string left, right;
    int sign = -1;
    std::string status = "ok";  // ok | typo | nilpotent
    std::string note;
};

struct FixtureSet {
    std::vector<PrintedTermFixture> fixtures;
    std::set<std::string> flipped_families;
    std::map<std::string, std::string> directive_notes;
};

namespace fixture_detail {

inline std::string take_field(const std::string& line, const std::string& key) {
    auto pos = line.find(key + "=");
    if (pos == std::string::npos) return {};
    pos += key.size() + 1;
    if (pos < line.size() && line[pos] == '"') {
        auto end = line.find('"', pos + 1);
        return line.substr(pos + 1, end - pos - 1);
    }
    auto end = line.find_first_of(" \t", pos);
    return line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

inline std::string ladder_word_str(std::span<const LadderOp> w) {
    if (w.empty()) return "1";
    std::string s;
    for (auto op : w) s += (op == LadderOp::Plus ? '+' : '-');
    return s;
}

inline std::string amp_str(const AmpRef& a) {
    const auto& k = a.key;
    std::string mode = k.mode == 1 ? "1" : "j";
    std::string out;
    if (k.kind == 'I') {
        out = "I(" + std::string(k.s1 > 0 ? "+" : "-") + "," + mode + "){" +
              std::string(1, det_char(k.mu)) + "}";
    } else {
        out = "J(" + std::string(k.s1 > 0 ? "+" : "-") + "," +
              std::string(k.s2 > 0 ? "+" : "-") + "," + mode + "){" +
              (k.mu_neg ? "-" : "") + det_char(k.mu) + "," + det_char(k.nu) + "}";
    }
    if (a.conjugated) out += "*";
    return out;
}

inline std::string amps_str(const std::vector<AmpRef>& amps) {
    std::string out;
    for (std::size_t i = 0; i < amps.size(); ++i) {
        if (i) out += "x";
        out += amp_str(amps[i]);
    }
    return out;
}

// Probe expectation class in the letters the printed blocks use:
// Tr(s+ rho)=gamma*, Tr(s- rho)=gamma, Tr(s+s- rho)=eta, Tr(s-s+ rho)=beta.
inline std::string probe_class_of(std::span<const LadderOp> right,
                                  std::span<const LadderOp> left) {
    std::vector<LadderOp> w(right.begin(), right.end());
    w.insert(w.end(), left.begin(), left.end());
    if (w.empty()) return "one";
    if (w.size() == 1) return w[0] == LadderOp::Plus ? "gamma*" : "gamma";
    if (w[0] == LadderOp::Plus && w[1] == LadderOp::Minus) return "eta";
    if (w[0] == LadderOp::Minus && w[1] == LadderOp::Plus) return "beta";
    return w[0] == LadderOp::Plus ? "pp" : "mm";
}

inline std::string field_class_of(std::span<const FieldOp> right,
                                  std::span<const FieldOp> left, bool coherent) {
    std::vector<FieldOp> w(right.begin(), right.end());
    w.insert(w.end(), left.begin(), left.end());
    if (w.size() != 2) return "other";
    bool c0 = w[0] == FieldOp::Create, c1 = w[1] == FieldOp::Create;
    if (!c0 && c1) return coherent ? "nplus" : "vac1";
    if (!coherent) return "zero";
    if (c0 && c1) return "astar2";
    if (!c0 && !c1) return "alpha2";
    return "abs2";
}

struct NormalForm {
    std::string family, amps, probe, field, left, right;
    int sign = 0;

    std::string str() const {
        return family + "|" + amps + "|" + probe + "|" + field + "|L:" + left +
               "|R:" + right + "|" + (sign > 0 ? "+" : "-");
    }
};

inline std::string family_name(TermFamily f) {
    if (f == TermFamily::SecondLeft) return "U2";
    if (f == TermFamily::Cross) return "U1xU1";
    return "other";
}

inline NormalForm normal_form(const OperatorTerm& t) {
    NormalForm n;
    n.family = family_name(t.family);
    n.amps = amps_str(t.amps);
    n.probe = probe_class_of(t.probe_right, t.probe_left);
    n.field = field_class_of(t.field_right, t.field_left,
                             t.mode == CavityConfig::coherent_mode);
    n.left = ladder_word_str(t.target_left);
    n.right = ladder_word_str(t.target_right);
    n.sign = t.prefactor.real() > 0 ? +1 : -1;
    return n;
}

}  // namespace fixture_detail

inline FixtureSet parse_fixtures(const std::string& text) {
    FixtureSet set;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' ||
                                 line.back() == '\r'))
            line.pop_back();
        if (line.empty()) continue;

        using fixture_detail::take_field;
        if (line.rfind("!flip-sign", 0) == 0) {
            std::string fam = take_field(line, "family");
            set.flipped_families.insert(fam);
            set.directive_notes[fam] = take_field(line, "note");
            continue;
        }
        PrintedTermFixture f;
        auto sp = line.find_first_of(" \t");
        f.tag = line.substr(0, sp);
        f.family = take_field(line, "family");
        f.amps = take_field(line, "amp");
        f.printed = take_field(line, "printed");
        f.probe_class = take_field(line, "probe");
        f.field_class = take_field(line, "field");
        f.left = take_field(line, "left");
        f.right = take_field(line, "right");
        std::string sign = take_field(line, "sign");
        std::string status = take_field(line, "status");
        f.note = take_field(line, "note");
        if (f.family.empty() || f.amps.empty() || sign.empty())
            throw ValidationError("fixture line " + format_int(lineno) +
                                  ": missing family/amp/sign");
        f.sign = sign == "+" ? +1 : -1;
        if (!status.empty()) f.status = status;
        if (f.left.empty()) f.left = "1";
        if (f.right.empty()) f.right = "1";
        set.fixtures.push_back(std::move(f));
    }
    return set;
}

struct FixtureReport {
    int matched = 0;            // status ok, found verbatim
    int typo_reconciled = 0;    // corrected spec found, raw absent
    int sign_reconciled = 0;    // matched through a flip-sign directive
    int nilpotent_confirmed = 0;
    std::vector<std::string> failures;
    std::map<std::string, int> per_block;  // lambda block coverage, e.g. "AB"
    int coherent = 0, vacuum = 0;

    bool ok() const { return failures.empty(); }

    std::string summary() const {
        std::string s = "fixtures: " + format_int(matched) + " matched, " +
                        format_int(typo_reconciled) + " typo-reconciled, " +
                        format_int(sign_reconciled) + " sign-reconciled, " +
                        format_int(nilpotent_confirmed) + " nilpotent, " +
                        format_int(static_cast<long long>(failures.size())) +
                        " failures";
        return s;
    }
};

namespace fixture_detail {

inline std::string lambda_block(const std::string& amps) {
    // detectors in order of appearance define the printed block label
    std::string dets;
    for (std::size_t i = 0; i + 1 < amps.size(); ++i) {
        if (amps[i] == '{' || amps[i] == ',') {
            char c = amps[i + 1];
            if (c == '-') c = amps[i + 2];
            if (c == 'A' || c == 'B') dets += c;
        }
    }
    if (dets.size() >= 2) return dets.substr(0, 2);
    return dets;
}

inline std::string expected_str(const PrintedTermFixture& f, const std::string& amps,
                                int sign) {
    NormalForm n;
    n.family = f.family;
    n.amps = amps;
    n.probe = f.probe_class;
    n.field = f.field_class;
    n.left = f.left;
    n.right = f.right;
    n.sign = sign;
    return n.str();
}

}  // namespace fixture_detail

// Verifies every fixture against the generated expansion. Coherent fixtures
// are matched against mode-1 terms, vacuum fixtures against a representative
// mode >= 2. Unreconciled mismatches land in the failure list.
inline FixtureReport check_against_generated(const FixtureSet& set,
                                             std::span<const OperatorTerm> terms) {
    using namespace fixture_detail;
    std::set<std::string> generated;
    std::set<std::string> referenced_amps;
    for (const auto& t : terms) {
        generated.insert(normal_form(t).str());
        referenced_amps.insert(amps_str(t.amps));
        for (const auto& a : t.amps) {
            AmpRef base = a;
            base.conjugated = false;
            referenced_amps.insert(amp_str(base));
        }
    }

    FixtureReport report;
    for (const auto& f : set.fixtures) {
        bool flipped = set.flipped_families.count(f.family) > 0;
        int want_sign = flipped ? -f.sign : f.sign;
        std::string raw = expected_str(f, f.amps, want_sign);
        std::string raw_printed_sign = expected_str(f, f.amps, f.sign);

        report.per_block[lambda_block(f.amps)]++;
        (f.field_class == "vac1" ? report.vacuum : report.coherent)++;

        if (f.status == "nilpotent") {
            // the printed word vanishes; nothing generated may reference it
            bool found = generated.count(raw_printed_sign) || generated.count(raw);
            bool amp_referenced = referenced_amps.count(f.amps) > 0;
            if (found || amp_referenced)
                report.failures.push_back(f.tag + ": nilpotent word survived generation");
            else
                report.nilpotent_confirmed++;
            continue;
        }
        if (f.status == "typo") {
            bool fixed_found = generated.count(raw) > 0;
            bool printed_found = false;
            if (!f.printed.empty() && f.printed != f.amps) {
                printed_found = generated.count(expected_str(f, f.printed, want_sign)) ||
                                generated.count(expected_str(f, f.printed, f.sign));
            }
            if (!fixed_found)
                report.failures.push_back(f.tag + ": corrected form absent: " + raw);
            else if (printed_found)
                report.failures.push_back(f.tag + ": printed form matched; not a typo");
            else
                report.typo_reconciled++;
            continue;
        }
        // status ok
        if (generated.count(raw)) {
            if (flipped && want_sign != f.sign)
                report.sign_reconciled++;
            else
                report.matched++;
        } else {
            report.failures.push_back(f.tag + ": no generated term matches " + raw);
        }
    }
    return report;
}

}  // namespace rqc
