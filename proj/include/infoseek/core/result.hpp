#pragma once

#include <stdexcept>
#include <type_traits>
#include <utility>
#include <variant>

namespace infoseek {

template <class E>
struct Unexpected {
    E error;
};

template <class E>
Unexpected<std::decay_t<E>> unexpected(E&& error)
{
    return {std::forward<E>(error)};
}

class BadResultAccess : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Value-or-error return for operations whose failure is an expected outcome
// (parsers, per-attempt rollouts). Hard errors still throw.
template <class T, class E>
class Result {
public:
    Result(T value) : state_(std::in_place_index<0>, std::move(value)) {}
    Result(Unexpected<E> err) : state_(std::in_place_index<1>, std::move(err.error)) {}

    bool has_value() const noexcept { return state_.index() == 0; }
    explicit operator bool() const noexcept { return has_value(); }

    T& value() &
    {
        check();
        return std::get<0>(state_);
    }
    const T& value() const&
    {
        check();
        return std::get<0>(state_);
    }
    T&& value() &&
    {
        check();
        return std::get<0>(std::move(state_));
    }

    const E& error() const&
    {
        if (has_value())
            throw BadResultAccess("Result holds a value, not an error");
        return std::get<1>(state_);
    }

    T* operator->() { return &value(); }
    const T* operator->() const { return &value(); }
    T& operator*() & { return value(); }
    const T& operator*() const& { return value(); }

private:
    void check() const
    {
        if (!has_value())
            throw BadResultAccess("Result holds an error, not a value");
    }

    std::variant<T, E> state_;
};

} // namespace infoseek
