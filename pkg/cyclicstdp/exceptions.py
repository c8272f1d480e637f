import click


class CyclicStdpException(click.ClickException):
    """Base for all library errors; click turns it into a non-zero exit."""
    def __init__(self, *args, **kwargs):
        self.exit_code = kwargs.pop('exit_code', 1)
        super(CyclicStdpException, self).__init__(*args, **kwargs)

    def __str__(self):
        return self.format_message()


class GeometryError(CyclicStdpException, ValueError):
    """Pattern, event or snapshot does not fit the configured geometry."""


class ScheduleError(CyclicStdpException, ValueError):
    """Schedule is out of order or extends past its end."""


class ConfigError(CyclicStdpException, ValueError):
    """Invalid configuration, naming the offending key if known."""
    def __init__(self, message, key=None, orig_exc=None):
        self.key = key
        self.orig_exc = orig_exc
        super(ConfigError, self).__init__(message)

    def format_message(self):
        """Prefix the key and append the original exception, if any."""
        msg = super(ConfigError, self).format_message()
        if self.key is not None:
            msg = '%s: %s' % (self.key, msg)
        if self.orig_exc:
            return '%s (%s: %s)' % (
                msg,
                self.orig_exc.__class__.__name__,
                self.orig_exc)
        return msg

    def __repr__(self):
        return 'ConfigError(message=%r, key=%r, orig_exc=%r)' % (
            self.message, self.key, self.orig_exc)
