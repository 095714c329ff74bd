#include "seqcamo/bits.hpp"

#include <sstream>
#include <stdexcept>

namespace seqcamo {

BitVec BitVec::from_string(std::string_view text)
{
    BitVec v;
    v.bits_.reserve(text.size());
    for (char c : text) {
        if (c != '0' && c != '1')
            throw std::invalid_argument("bit string contains '" + std::string(1, c) + "'");
        v.bits_.push_back(c == '1' ? 1 : 0);
    }
    return v;
}

BitVec BitVec::from_uint(std::uint64_t value, std::size_t width)
{
    if (width > 64)
        throw std::invalid_argument("BitVec::from_uint: width exceeds 64");
    BitVec v(width);
    for (std::size_t i = 0; i < width; ++i)
        v.bits_[i] = (value >> i) & 1U;
    return v;
}

std::uint64_t BitVec::to_uint() const
{
    if (bits_.size() > 64)
        throw std::logic_error("BitVec::to_uint: width exceeds 64");
    std::uint64_t value = 0;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        value |= static_cast<std::uint64_t>(bits_[i]) << i;
    return value;
}

std::string BitVec::to_string() const
{
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i])
            s[i] = '1';
    return s;
}

BitSeq::BitSeq(std::size_t width, std::vector<BitVec> steps) : width_(width)
{
    steps_.reserve(steps.size());
    for (auto& s : steps)
        push_back(std::move(s));
}

BitSeq BitSeq::from_string(std::string_view text, std::size_t width)
{
    BitSeq seq(width);
    std::istringstream in{std::string(text)};
    std::string token;
    while (in >> token)
        seq.push_back(BitVec::from_string(token));
    return seq;
}

void BitSeq::push_back(BitVec step)
{
    if (step.size() != width_)
        throw std::invalid_argument("BitSeq: step width " + std::to_string(step.size()) + " != " +
                                    std::to_string(width_));
    steps_.push_back(std::move(step));
}

BitSeq BitSeq::prefix(std::size_t length) const
{
    BitSeq out(width_);
    for (std::size_t i = 0; i < length && i < steps_.size(); ++i)
        out.steps_.push_back(steps_[i]);
    return out;
}

BitSeq BitSeq::concat(const BitSeq& tail) const
{
    if (tail.width_ != width_ && !tail.empty())
        throw std::invalid_argument("BitSeq::concat: width mismatch");
    BitSeq out = *this;
    out.steps_.insert(out.steps_.end(), tail.steps_.begin(), tail.steps_.end());
    return out;
}

std::string BitSeq::to_string() const
{
    std::string s;
    for (std::size_t i = 0; i < steps_.size(); ++i) {
        if (i)
            s += ' ';
        s += steps_[i].to_string();
    }
    return s;
}

} // namespace seqcamo
