#pragma once

#include <atomic>
#include <chrono>

namespace zest {

/// Milliseconds since the Unix epoch.
using Timestamp = std::chrono::milliseconds;

class Clock {
public:
    virtual ~Clock() = default;
    virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
public:
    Timestamp now() const override
    {
        return std::chrono::duration_cast<Timestamp>(
            std::chrono::system_clock::now().time_since_epoch());
    }
};

/// Simulated clock; only moves when told to.
class ManualClock final : public Clock {
public:
    explicit ManualClock(Timestamp start = Timestamp{0}) : now_(start.count()) {}

    Timestamp now() const override { return Timestamp{now_.load()}; }
    void set(Timestamp t) { now_ = t.count(); }
    void advance(Timestamp by) { now_ += by.count(); }

private:
    std::atomic<Timestamp::rep> now_;
};

}  // namespace zest
