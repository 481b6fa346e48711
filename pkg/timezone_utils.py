"""
Timezone helpers for displaying archive timestamps.
Timestamps are stored as naive UTC and shown in the configured timezone.
"""
import pytz

import config


def convert_utc_to_local(utc_dt, timezone=None):
    """
    Convert a UTC datetime to the configured local timezone.

    Args:
        utc_dt: A datetime in UTC (naive or tz-aware)
        timezone: Optional timezone name overriding config.TIMEZONE

    Returns:
        A tz-aware datetime in the target timezone, or None
    """
    if utc_dt is None:
        return None

    if utc_dt.tzinfo is None:
        utc_dt = pytz.UTC.localize(utc_dt)
    elif utc_dt.tzinfo != pytz.UTC:
        utc_dt = utc_dt.astimezone(pytz.UTC)

    return utc_dt.astimezone(pytz.timezone(timezone or config.TIMEZONE))


def format_datetime(dt, format_str="%Y-%m-%d %H:%M:%S %Z", timezone=None):
    """Format a stored (UTC) datetime for display; "N/A" when missing"""
    if dt is None:
        return "N/A"
    return convert_utc_to_local(dt, timezone).strftime(format_str)
