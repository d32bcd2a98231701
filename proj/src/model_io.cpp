#include "mg/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace mg {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    if (s.size() >= width) return s + " ";
    return s + std::string(width - s.size(), ' ');
}

constexpr std::size_t kField = 12;

char sense_char(RowSense s) {
    switch (s) {
        case RowSense::le: return 'L';
        case RowSense::ge: return 'G';
        default: return 'E';
    }
}

void write_mps(const MilpModel& m, std::ostream& os) {
    os << "NAME          " << m.name << "\n";
    os << "OBJSENSE\n    MAX\n";

    os << "ROWS\n";
    os << " N  COST\n";
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        os << " " << sense_char(m.rows[r].sense) << "  " << m.row_names[r] << "\n";
    }

    // Column-major entries; the row-major model is transposed once here.
    std::vector<std::vector<LinTerm>> by_col(m.n_cols());
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        for (const LinTerm& t : m.rows[r].terms) {
            by_col[static_cast<std::size_t>(t.col)].push_back(
                {static_cast<int>(r), t.coef});
        }
    }

    os << "COLUMNS\n";
    bool in_int = false;
    int marker = 0;
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        if (m.integer[c] != in_int) {
            in_int = m.integer[c];
            os << "    " << pad("M" + std::to_string(marker++), kField)
               << pad("'MARKER'", kField + 12)
               << (in_int ? "'INTORG'" : "'INTEND'") << "\n";
        }
        if (m.objective[c] != 0.0) {
            os << "    " << pad(m.col_names[c], kField) << pad("COST", kField)
               << num(m.objective[c]) << "\n";
        }
        for (const LinTerm& t : by_col[c]) {
            os << "    " << pad(m.col_names[c], kField)
               << pad(m.row_names[static_cast<std::size_t>(t.col)], kField)
               << num(t.coef) << "\n";
        }
    }
    if (in_int) {
        os << "    " << pad("M" + std::to_string(marker++), kField)
           << pad("'MARKER'", kField + 12) << "'INTEND'" << "\n";
    }

    os << "RHS\n";
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        if (m.rows[r].rhs != 0.0) {
            os << "    " << pad("RHS", kField) << pad(m.row_names[r], kField)
               << num(m.rows[r].rhs) << "\n";
        }
    }

    os << "BOUNDS\n";
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        const double lo = m.lo[c];
        const double up = m.up[c];
        if (lo == up) {
            os << " FX " << pad("BND", kField - 1) << pad(m.col_names[c], kField)
               << num(lo) << "\n";
            continue;
        }
        if (lo == -kInf) {
            os << " MI " << pad("BND", kField - 1) << pad(m.col_names[c], kField)
               << "\n";
        } else if (lo != 0.0) {
            os << " LO " << pad("BND", kField - 1) << pad(m.col_names[c], kField)
               << num(lo) << "\n";
        }
        if (up != kInf) {
            os << " UP " << pad("BND", kField - 1) << pad(m.col_names[c], kField)
               << num(up) << "\n";
        }
    }
    os << "ENDATA\n";
}

void write_lp_text(const MilpModel& m, std::ostream& os) {
    auto term = [](double coef, const std::string& name) {
        std::string s = coef < 0.0 ? "- " : "+ ";
        s += num(std::abs(coef));
        s += " ";
        s += name;
        return s;
    };

    os << "\\ " << m.name << "\n";
    os << "Maximize\n COST:";
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        if (m.objective[c] != 0.0) {
            os << " " << term(m.objective[c], m.col_names[c]);
        }
    }
    os << "\nSubject To\n";
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        os << " " << m.row_names[r] << ":";
        for (const LinTerm& t : m.rows[r].terms) {
            os << " " << term(t.coef, m.col_names[static_cast<std::size_t>(t.col)]);
        }
        switch (m.rows[r].sense) {
            case RowSense::le: os << " <= "; break;
            case RowSense::ge: os << " >= "; break;
            default: os << " = "; break;
        }
        os << num(m.rows[r].rhs) << "\n";
    }
    os << "Bounds\n";
    std::vector<std::string> binaries;
    std::vector<std::string> generals;
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        const double lo = m.lo[c];
        const double up = m.up[c];
        if (m.integer[c]) {
            if (lo == 0.0 && up == 1.0) {
                binaries.push_back(m.col_names[c]);
                continue;
            }
            generals.push_back(m.col_names[c]);
        }
        if (lo == 0.0 && up == kInf) continue;  // LP-format default
        if (lo == -kInf && up == kInf) {
            os << " " << m.col_names[c] << " free\n";
            continue;
        }
        os << " ";
        if (lo != 0.0 || up == kInf) {
            os << (lo == -kInf ? std::string("-inf") : num(lo)) << " <= ";
        }
        os << m.col_names[c];
        if (up != kInf) os << " <= " << num(up);
        os << "\n";
    }
    if (!binaries.empty()) {
        os << "Binaries\n";
        for (const std::string& s : binaries) os << " " << s;
        os << "\n";
    }
    if (!generals.empty()) {
        os << "Generals\n";
        for (const std::string& s : generals) os << " " << s;
        os << "\n";
    }
    os << "End\n";
}

std::vector<std::string> tokens_of(const std::string& line) {
    std::istringstream is(line);
    std::vector<std::string> toks;
    std::string t;
    while (is >> t) toks.push_back(t);
    return toks;
}

double parse_num(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw IOError("bad number in MPS file: " + s);
    return v;
}

}  // namespace

void export_model(const MilpModel& model, ModelFormat format, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IOError("cannot open for writing: " + path);
    if (format == ModelFormat::mps) {
        write_mps(model, os);
    } else {
        write_lp_text(model, os);
    }
    os.flush();
    if (!os) throw IOError("write failed: " + path);
}

MilpModel import_mps(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IOError("cannot open for reading: " + path);

    MilpModel m;
    enum class Section { none, objsense, rows, columns, rhs, bounds, done };
    Section section = Section::none;

    std::string obj_row;
    std::map<std::string, std::size_t> row_index;
    std::map<std::string, std::size_t> col_index;
    bool in_int = false;
    bool saw_max = false;

    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '*') continue;

        if (line[0] != ' ') {  // section header
            auto toks = tokens_of(line);
            const std::string& key = toks[0];
            if (key == "NAME") {
                m.name = toks.size() > 1 ? toks[1] : "model";
            } else if (key == "OBJSENSE") {
                section = Section::objsense;
            } else if (key == "ROWS") {
                section = Section::rows;
            } else if (key == "COLUMNS") {
                section = Section::columns;
            } else if (key == "RHS") {
                section = Section::rhs;
            } else if (key == "BOUNDS") {
                section = Section::bounds;
            } else if (key == "ENDATA") {
                section = Section::done;
                break;
            } else {
                throw IOError("unsupported MPS section: " + key);
            }
            continue;
        }

        auto toks = tokens_of(line);
        if (toks.empty()) continue;
        switch (section) {
            case Section::objsense: {
                if (toks[0] == "MAX" || toks[0] == "MAXIMIZE") {
                    saw_max = true;
                } else {
                    throw IOError("only maximization MPS files are supported");
                }
                break;
            }
            case Section::rows: {
                if (toks.size() != 2) throw IOError("bad ROWS line: " + line);
                if (toks[0] == "N") {
                    if (obj_row.empty()) obj_row = toks[1];
                } else {
                    RowSense sense = RowSense::eq;
                    if (toks[0] == "L") sense = RowSense::le;
                    else if (toks[0] == "G") sense = RowSense::ge;
                    else if (toks[0] != "E") throw IOError("bad row sense: " + toks[0]);
                    row_index[toks[1]] = m.rows.size();
                    m.add_row(toks[1], {}, sense, 0.0);
                }
                break;
            }
            case Section::columns: {
                if (toks.size() >= 3 && toks[1] == "'MARKER'") {
                    if (toks[2] == "'INTORG'") in_int = true;
                    else if (toks[2] == "'INTEND'") in_int = false;
                    else throw IOError("bad marker line: " + line);
                    break;
                }
                if (toks.size() < 3 || toks.size() % 2 == 0) {
                    throw IOError("bad COLUMNS line: " + line);
                }
                auto found = col_index.find(toks[0]);
                std::size_t c;
                if (found == col_index.end()) {
                    c = static_cast<std::size_t>(
                        m.add_col(toks[0], 0.0, kInf, 0.0, in_int));
                    col_index[toks[0]] = c;
                } else {
                    c = found->second;
                }
                for (std::size_t k = 1; k + 1 < toks.size(); k += 2) {
                    const double v = parse_num(toks[k + 1]);
                    if (toks[k] == obj_row) {
                        m.objective[c] = v;
                    } else {
                        auto row = row_index.find(toks[k]);
                        if (row == row_index.end()) {
                            throw IOError("unknown row in COLUMNS: " + toks[k]);
                        }
                        m.rows[row->second].terms.push_back(
                            {static_cast<int>(c), v});
                    }
                }
                break;
            }
            case Section::rhs: {
                if (toks.size() < 3 || toks.size() % 2 == 0) {
                    throw IOError("bad RHS line: " + line);
                }
                for (std::size_t k = 1; k + 1 < toks.size(); k += 2) {
                    auto row = row_index.find(toks[k]);
                    if (row == row_index.end()) {
                        throw IOError("unknown row in RHS: " + toks[k]);
                    }
                    m.rows[row->second].rhs = parse_num(toks[k + 1]);
                }
                break;
            }
            case Section::bounds: {
                if (toks.size() < 3) throw IOError("bad BOUNDS line: " + line);
                auto col = col_index.find(toks[2]);
                if (col == col_index.end()) {
                    throw IOError("unknown column in BOUNDS: " + toks[2]);
                }
                const std::size_t c = col->second;
                const std::string& type = toks[0];
                if (type == "MI") {
                    m.lo[c] = -kInf;
                } else if (type == "PL") {
                    m.up[c] = kInf;
                } else if (type == "BV") {
                    m.lo[c] = 0.0;
                    m.up[c] = 1.0;
                    m.integer[c] = true;
                } else {
                    if (toks.size() < 4) throw IOError("bad BOUNDS line: " + line);
                    const double v = parse_num(toks[3]);
                    if (type == "UP") m.up[c] = v;
                    else if (type == "LO") m.lo[c] = v;
                    else if (type == "FX") { m.lo[c] = v; m.up[c] = v; }
                    else throw IOError("unsupported bound type: " + type);
                }
                break;
            }
            default:
                throw IOError("data line outside any section: " + line);
        }
    }
    if (section != Section::done) throw IOError("missing ENDATA: " + path);
    if (!saw_max) throw IOError("missing OBJSENSE MAX: " + path);
    if (obj_row.empty()) throw IOError("missing objective row: " + path);
    return m;
}

}  // namespace mg
