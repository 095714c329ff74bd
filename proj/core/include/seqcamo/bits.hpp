#ifndef SEQCAMO_BITS_HPP
#define SEQCAMO_BITS_HPP

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace seqcamo {

/// Fixed-width bit vector. Bit i of an input/state/output vector corresponds
/// to the i-th declared input/flip-flop/output of the circuit.
class BitVec
{
  public:
    BitVec() = default;
    explicit BitVec(std::size_t width, bool value = false) : bits_(width, value ? 1 : 0) {}

    /// Parses a string of '0'/'1' characters; character i becomes bit i.
    static BitVec from_string(std::string_view text);
    /// Bit i takes bit i of `value`. Requires width <= 64.
    static BitVec from_uint(std::uint64_t value, std::size_t width);

    std::size_t size() const { return bits_.size(); }
    bool empty() const { return bits_.empty(); }
    bool operator[](std::size_t i) const { return bits_[i] != 0; }
    void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
    void push_back(bool v) { bits_.push_back(v ? 1 : 0); }

    std::uint64_t to_uint() const;
    std::string to_string() const;

    const std::vector<std::uint8_t>& raw() const { return bits_; }

    friend auto operator<=>(const BitVec&, const BitVec&) = default;

  private:
    std::vector<std::uint8_t> bits_;
};

/// Ordered sequence of equal-width bit vectors (one per time step).
class BitSeq
{
  public:
    BitSeq() = default;
    explicit BitSeq(std::size_t width) : width_(width) {}
    BitSeq(std::size_t width, std::vector<BitVec> steps);

    /// Whitespace-separated steps, e.g. "0101 1100". Width is taken from
    /// `width`; an empty string yields an empty sequence.
    static BitSeq from_string(std::string_view text, std::size_t width);

    std::size_t width() const { return width_; }
    std::size_t size() const { return steps_.size(); }
    bool empty() const { return steps_.empty(); }
    const BitVec& operator[](std::size_t i) const { return steps_[i]; }
    const std::vector<BitVec>& steps() const { return steps_; }

    void push_back(BitVec step);
    BitSeq prefix(std::size_t length) const;
    BitSeq concat(const BitSeq& tail) const;

    std::string to_string() const;

    friend auto operator<=>(const BitSeq&, const BitSeq&) = default;

  private:
    std::size_t width_ = 0;
    std::vector<BitVec> steps_;
};

} // namespace seqcamo

#endif // SEQCAMO_BITS_HPP
