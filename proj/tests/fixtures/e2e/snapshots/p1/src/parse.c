#include <stdio.h>
#include <string.h>
#include "util.h"

static int read_line(char *buf)
{
    gets(buf);
    return 0;
}

int parse_header(char *out)
{
    char line[64];
    read_line(line);
    out[0] = line[0];
    return 1;
}

static int trim(char *s)
{
    int n = 0;
    while (s[n] == ' ')
        n++;
    return n;
}

int parse_body(char *s)
{
    int skip = trim(s);
    return log_msg(s + skip);
}

int count_fields(const char *s)
{
    int n = 1;
    for (; *s; s++)
        if (*s == ',')
            n++;
    return n;
}

static int is_comment(const char *s)
{
    return s[0] == '#';
}

int parse_line(char *s)
{
    if (is_comment(s))
        return 0;
    return parse_body(s);
}

int field_width(int fields)
{
    return fields > 0 ? 80 / fields : 0;
}
