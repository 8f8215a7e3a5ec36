from interleave.schedule._schedule import (
    StageId,
    Schedule,
    check_order,
    predecessor,
    build_blocked,
    SchedulePolicy,
    build_schedule,
    build_interleaved,
)
