#pragma once

// Exceptions must not escape an OpenMP region; loop bodies run through a slot that
// keeps the first one and rethrows it after the region.

#include <exception>

namespace spm::detail {

class ExceptionSlot {
public:
    template <typename F>
    void run(F&& body) noexcept {
        try {
            body();
        } catch (...) {
#pragma omp critical(spm_exception_slot)
            if (!error_) error_ = std::current_exception();
        }
    }

    void rethrow() const {
        if (error_) std::rethrow_exception(error_);
    }

private:
    std::exception_ptr error_;
};

}  // namespace spm::detail
