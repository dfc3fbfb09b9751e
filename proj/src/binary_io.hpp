#ifndef GREENREC_SRC_BINARY_IO_HPP_
#define GREENREC_SRC_BINARY_IO_HPP_

// Little helpers for the model file format. Values are written in host byte
// order; files are not meant to move between architectures.

#include <cstdint>
#include <istream>
#include <ostream>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "greenrec/ingest.hpp"

namespace greenrec::io {

template <class T>
void put(std::ostream& out, const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
    static_assert(std::is_trivially_copyable_v<T>);
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw Error("model file truncated");
    return v;
}

template <class T>
void put_vec(std::ostream& out, const std::vector<T>& v) {
    put<std::uint64_t>(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
std::vector<T> get_vec(std::istream& in) {
    auto n = get<std::uint64_t>(in);
    if (n > (std::uint64_t{1} << 40)) throw Error("model file corrupt");
    std::vector<T> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    if (!in) throw Error("model file truncated");
    return v;
}

inline void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
}

inline Eigen::MatrixXd get_matrix(std::istream& in) {
    auto rows = get<std::uint64_t>(in);
    auto cols = get<std::uint64_t>(in);
    if (rows * cols > (std::uint64_t{1} << 36)) throw Error("model file corrupt");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw Error("model file truncated");
    return m;
}

}  // namespace greenrec::io

#endif  // GREENREC_SRC_BINARY_IO_HPP_
